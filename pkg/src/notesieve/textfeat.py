"""Tokenization, vocabulary construction (frequent unigrams + PMI n-grams),
and binary bag-of-words encoding."""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

# bracketed placeholders like [DATE] survive as single tokens, case preserved
_TOKEN_RE = re.compile(r"\[[A-Za-z0-9_]+\]|[A-Za-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; bracketed placeholders kept verbatim."""
    out = []
    for m in _TOKEN_RE.finditer(text):
        tok = m.group(0)
        out.append(tok if tok.startswith("[") else tok.lower())
    return out


@dataclass(frozen=True)
class VocabConfig:
    max_unigrams: int = 20000
    min_count: int = 10
    n_bigrams: int = 500
    n_trigrams: int = 500
    ngram_min_count: int = 5


@dataclass
class Vocabulary:
    unigrams: list[str]
    bigrams: list[tuple[str, ...]]
    trigrams: list[tuple[str, ...]]
    corpus_role: str = "source"
    index: dict = field(init=False, repr=False)
    fingerprint: str = field(init=False)

    def __post_init__(self):
        self.index = {}
        pos = 0
        for u in self.unigrams:
            self.index[u] = pos
            pos += 1
        for b in self.bigrams:
            self.index[b] = pos
            pos += 1
        for t in self.trigrams:
            self.index[t] = pos
            pos += 1
        if len(self.index) != pos:
            raise ValueError("duplicate n-grams in vocabulary")
        h = hashlib.sha256()
        h.update(self.corpus_role.encode())
        for u in self.unigrams:
            h.update(b"u" + u.encode())
        for b in self.bigrams:
            h.update(b"b" + " ".join(b).encode())
        for t in self.trigrams:
            h.update(b"t" + " ".join(t).encode())
        self.fingerprint = h.hexdigest()[:16]

    def __len__(self) -> int:
        return len(self.index)

    def to_json(self, path: str | Path) -> None:
        data = {
            "corpus_role": self.corpus_role,
            "unigrams": self.unigrams,
            "bigrams": [list(b) for b in self.bigrams],
            "trigrams": [list(t) for t in self.trigrams],
            "fingerprint": self.fingerprint,
        }
        Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, path: str | Path) -> "Vocabulary":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        vocab = cls(
            unigrams=data["unigrams"],
            bigrams=[tuple(b) for b in data["bigrams"]],
            trigrams=[tuple(t) for t in data["trigrams"]],
            corpus_role=data["corpus_role"],
        )
        if vocab.fingerprint != data["fingerprint"]:
            raise ValueError("vocabulary fingerprint mismatch")
        return vocab


def pmi(ngram: Sequence[str], ngram_count: int, ngram_total: int,
        unigram_counts: Counter, unigram_total: int) -> float | None:
    """PMI = ln(P(ngram) / prod P(component)); None when undefined.

    Probabilities are count/total for the respective n-gram order.
    """
    if ngram_count <= 0 or ngram_total <= 0:
        return None
    p_joint = ngram_count / ngram_total
    denom = 1.0
    for tok in ngram:
        c = unigram_counts.get(tok, 0)
        if c <= 0:
            return None
        denom *= c / unigram_total
    return math.log(p_joint / denom)


def _ngrams(tokens: Sequence[str], n: int) -> Iterable[tuple[str, ...]]:
    for i in range(len(tokens) - n + 1):
        yield tuple(tokens[i:i + n])


def build_vocabulary(texts: Iterable[str], config: VocabConfig = VocabConfig(),
                     corpus_role: str = "source") -> Vocabulary:
    """Top-frequency unigrams plus top-PMI bigrams/trigrams.

    Ties break by (count desc, lexicographic); n-grams never cross text
    boundaries. Small corpora simply yield smaller vocabularies.
    """
    uni = Counter()
    bi = Counter()
    tri = Counter()
    bi_total = 0
    tri_total = 0
    for text in texts:
        toks = tokenize(text)
        uni.update(toks)
        for g in _ngrams(toks, 2):
            bi[g] += 1
        for g in _ngrams(toks, 3):
            tri[g] += 1
        bi_total += max(len(toks) - 1, 0)
        tri_total += max(len(toks) - 2, 0)
    uni_total = sum(uni.values())

    eligible = [(tok, c) for tok, c in uni.items() if c >= config.min_count]
    eligible.sort(key=lambda tc: (-tc[1], tc[0]))
    unigrams = [tok for tok, _ in eligible[:config.max_unigrams]]

    def select(counts: Counter, total: int, top_n: int) -> list[tuple[str, ...]]:
        scored = []
        for g, c in counts.items():
            if c < config.ngram_min_count:
                continue
            score = pmi(g, c, total, uni, uni_total)
            if score is None:
                continue
            scored.append((g, score, c))
        scored.sort(key=lambda x: (-x[1], -x[2], x[0]))
        return [g for g, _, _ in scored[:top_n]]

    return Vocabulary(
        unigrams=unigrams,
        bigrams=select(bi, bi_total, config.n_bigrams),
        trigrams=select(tri, tri_total, config.n_trigrams),
        corpus_role=corpus_role,
    )


@dataclass(frozen=True)
class SparseVector:
    dimension: int
    indices: tuple[int, ...]  # strictly increasing, binary presence

    def __post_init__(self):
        prev = -1
        for i in self.indices:
            if i <= prev or i >= self.dimension:
                raise ValueError("indices must be strictly increasing and < dimension")
            prev = i


def bow_encode(tokens: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """Binary presence of vocabulary n-grams over the token sequence."""
    active: set[int] = set()
    for tok in tokens:
        idx = vocab.index.get(tok)
        if idx is not None:
            active.add(idx)
    if vocab.bigrams:
        for g in _ngrams(tokens, 2):
            idx = vocab.index.get(g)
            if idx is not None:
                active.add(idx)
    if vocab.trigrams:
        for g in _ngrams(tokens, 3):
            idx = vocab.index.get(g)
            if idx is not None:
                active.add(idx)
    return SparseVector(dimension=len(vocab), indices=tuple(sorted(active)))
