"""Reading/writing copy analysis: ROUGE-1/2/L of newly written text against
the notes read in the same session."""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, asdict
from typing import Sequence

from .corpus import Corpus
from .sessionizer import SessionSet, lcs_table
from .textfeat import tokenize

# excluded from n-grams when concatenating read notes
_SEP = "\x1e"


def _f1(p: float | None, r: float | None) -> float | None:
    if p is None or r is None:
        return None
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


@dataclass(frozen=True)
class RougeScore:
    variant: str
    precision: float | None  # None when undefined (empty candidate side)
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    out = Counter()
    for i in range(len(tokens) - n + 1):
        g = tokens[i:i + n]
        if _SEP in g:
            continue
        out[tuple(g)] += 1
    return out


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Clipped n-gram multiset overlap precision/recall."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    overlap = sum(min(c, ref.get(g, 0)) for g, c in cand.items())
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    precision = overlap / cand_total if cand_total else None
    recall = overlap / ref_total if ref_total else None
    return RougeScore(f"R{n}", precision, recall, _f1(precision, recall))


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Longest-common-subsequence precision/recall."""
    cand = [t for t in candidate if t != _SEP]
    ref = [t for t in reference if t != _SEP]
    if cand and ref:
        lcs = lcs_table(cand, ref)[len(cand)][len(ref)]
    else:
        lcs = 0
    precision = lcs / len(cand) if cand else None
    recall = lcs / len(ref) if ref else None
    return RougeScore("RL", precision, recall, _f1(precision, recall))


@dataclass(frozen=True)
class CopyAnalysis:
    n_sessions_used: int
    n_sessions_skipped: int
    mean_r1_precision: float | None
    std_r1_precision: float | None
    mean_r2_precision: float | None
    std_r2_precision: float | None
    mean_rl_precision: float | None
    std_rl_precision: float | None
    per_session: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_session"] = list(d["per_session"])
        return d


def session_copy_analysis(corpus: Corpus, session_sets: dict[str, SessionSet],
                          keep_detail: bool = False) -> CopyAnalysis:
    """Per-session ROUGE precision of new text vs. concatenated read notes.

    Sessions lacking reads or new text are skipped and counted. Read notes are
    concatenated in read-time order with a separator excluded from n-grams.
    """
    r1s, r2s, rls = [], [], []
    detail = []
    used = skipped = 0
    for visit_id in sorted(session_sets):
        for sess in session_sets[visit_id].sessions:
            if not sess.read_doc_ids or not sess.new_written_text:
                skipped += 1
                continue
            ref_tokens: list[str] = []
            for doc_id, _t in sess.read_doc_ids:
                doc = corpus.documents.get(doc_id)
                if doc is None:
                    continue
                if ref_tokens:
                    ref_tokens.append(_SEP)
                ref_tokens.extend(tokenize(doc.text))
            if not ref_tokens:
                skipped += 1
                continue
            used += 1
            cand = list(sess.new_written_text)
            r1 = rouge_n(cand, ref_tokens, 1)
            r2 = rouge_n(cand, ref_tokens, 2)
            rl = rouge_l(cand, ref_tokens)
            if r1.precision is not None:
                r1s.append(r1.precision)
            if r2.precision is not None:
                r2s.append(r2.precision)
            if rl.precision is not None:
                rls.append(rl.precision)
            if keep_detail:
                detail.append({
                    "visit_id": visit_id, "session_index": sess.index,
                    "r1_precision": r1.precision, "r2_precision": r2.precision,
                    "rl_precision": rl.precision,
                })

    def mean_std(xs: list[float]) -> tuple[float | None, float | None]:
        if not xs:
            return None, None
        return (statistics.mean(xs),
                statistics.pstdev(xs) if len(xs) > 1 else 0.0)

    m1, s1 = mean_std(r1s)
    m2, s2 = mean_std(r2s)
    ml, sl = mean_std(rls)
    return CopyAnalysis(
        n_sessions_used=used, n_sessions_skipped=skipped,
        mean_r1_precision=m1, std_r1_precision=s1,
        mean_r2_precision=m2, std_r2_precision=s2,
        mean_rl_precision=ml, std_rl_precision=sl,
        per_session=tuple(detail),
    )
