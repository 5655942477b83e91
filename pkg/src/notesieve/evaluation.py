"""Classification metrics (positive-class P/R/F1, rank-statistic AUC),
per-session retrieval metrics, the recency baseline, and the experiment
runner producing the model-comparison and ablation tables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import Corpus
from .sessionizer import Session, sessionize_corpus
from .featurizer import (ExampleSet, FeatureSchema, ablate_recent,
                         build_dataset, project_features)
from .model import (LogisticModel, crossval_tune, examples_to_csr,
                    split_by_patient, subset_by_patients, top_weights, train)
from .textfeat import VocabConfig, build_vocabulary

METADATA_BLOCKS = ("chief_complaint", "writer_role", "time_diff", "recency",
                   "read_repetition", "service", "note_type")


def auc_score(labels: Sequence[float], scores: Sequence[float]) -> float | None:
    """Mann-Whitney AUC; tied scores contribute 1/2. None for single-class input."""
    y = np.asarray(labels, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s, method="average")
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass(frozen=True)
class ClassificationReport:
    precision: float
    recall: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    n_positive: int
    n_total: int

    def to_dict(self) -> dict:
        return asdict(self)


def classification_metrics(labels: Sequence[float], scores: Sequence[float],
                           threshold: float = 0.5) -> ClassificationReport:
    y = np.asarray(labels, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise ValueError("labels and scores must have equal length")
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassificationReport(
        precision=precision, recall=recall, f1=f1, auc=auc_score(y, s),
        tp=tp, fp=fp, tn=tn, fn=fn,
        n_positive=int(y.sum()), n_total=len(y),
    )


@dataclass(frozen=True)
class SessionRanking:
    """A full candidate ranking (best first) and the true positive set."""
    visit_id: str
    session_index: int
    ranked_doc_ids: tuple[str, ...]
    positive_ids: frozenset[str]


@dataclass(frozen=True)
class RetrievalReport:
    k: int
    precision_at_k: float | None
    recall_at_k: float | None
    f1_at_k: float | None
    n_sessions: int
    per_session: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_session"] = list(d["per_session"])
        return d


def retrieval_metrics(rankings: Sequence[SessionRanking], k: int = 10,
                      keep_detail: bool = False) -> RetrievalReport:
    """Macro-averaged p@k, r@k, f1@k over sessions with >=1 positive.

    p@k uses denominator min(k, |candidates|) so short histories are not
    penalized.
    """
    ps, rs, f1s = [], [], []
    detail = []
    for r in rankings:
        if not r.positive_ids:
            continue
        top = r.ranked_doc_ids[:k]
        hits = sum(1 for d in top if d in r.positive_ids)
        denom = min(k, len(r.ranked_doc_ids))
        p = hits / denom if denom else 0.0
        rec = hits / len(r.positive_ids)
        f1 = 2 * p * rec / (p + rec) if p + rec else 0.0
        ps.append(p)
        rs.append(rec)
        f1s.append(f1)
        if keep_detail:
            detail.append({"visit_id": r.visit_id, "session_index": r.session_index,
                           "p_at_k": p, "r_at_k": rec, "f1_at_k": f1})
    if not ps:
        return RetrievalReport(k, None, None, None, 0)
    return RetrievalReport(
        k=k,
        precision_at_k=float(np.mean(ps)),
        recall_at_k=float(np.mean(rs)),
        f1_at_k=float(np.mean(f1s)),
        n_sessions=len(ps),
        per_session=tuple(detail),
    )


def recency_baseline(corpus: Corpus, session: Session, k: int = 10,
                     ) -> list[tuple[str, float]]:
    """Candidates newest-first (doc_id tie-break) with reciprocal-rank scores;
    candidates past rank k all score 0."""
    docs = [corpus.documents[d] for d in session.available_doc_ids]
    docs.sort(key=lambda d: (-d.creation_time, d.doc_id))
    return [(d.doc_id, 1.0 / (r + 1) if r < k else 0.0) for r, d in enumerate(docs)]


def baseline_scores(example_set: ExampleSet, k: int = 10) -> np.ndarray:
    """Per-example recency-baseline score from the stored recency rank."""
    return np.asarray(
        [1.0 / e.recency_rank if e.recency_rank <= k else 0.0
         for e in example_set.examples], dtype=np.float64)


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    split_ratio: float = 0.8
    lam: float = 1e-4
    use_cv: bool = False
    lambda_grid: tuple[float, ...] = ()
    k: int = 10
    ablation_cutoff: int = 5
    vocab: VocabConfig = VocabConfig(max_unigrams=20000, min_count=10,
                                     n_bigrams=500, n_trigrams=500)
    top_n_weights: int = 10


def _session_rankings(example_set: ExampleSet, scores: np.ndarray,
                      ) -> list[SessionRanking]:
    by_session: dict[tuple[str, int], list[tuple[float, str, int]]] = {}
    for e, s in zip(example_set.examples, scores):
        by_session.setdefault((e.visit_id, e.session_index), []).append(
            (float(s), e.doc_id, e.y))
    out = []
    for (visit_id, idx), rows in sorted(by_session.items()):
        rows.sort(key=lambda r: (-r[0], r[1]))
        out.append(SessionRanking(
            visit_id=visit_id, session_index=idx,
            ranked_doc_ids=tuple(d for _, d, _ in rows),
            positive_ids=frozenset(d for _, d, y in rows if y == 1),
        ))
    return out


def build_experiment_dataset(corpus: Corpus, config: ExperimentConfig,
                             ) -> ExampleSet:
    """Sessionize, build vocabularies and schema, and featurize the corpus."""
    filtered = sessionize_corpus(corpus)
    source_vocab = build_vocabulary(
        (corpus.documents[d].text for d in sorted(corpus.documents)),
        config.vocab, corpus_role="source")
    final_texts = [corpus.snapshots[v][-1].text
                   for v in sorted(corpus.snapshots) if corpus.snapshots[v]]
    written_vocab = build_vocabulary(final_texts, config.vocab, corpus_role="written")
    schema = FeatureSchema.for_corpus(corpus.registries, source_vocab, written_vocab)
    return build_dataset(corpus, filtered, source_vocab, written_vocab, schema)


def run_experiment(corpus: Corpus, config: ExperimentConfig = ExperimentConfig(),
                   ) -> dict:
    """Train/evaluate all model variants plus the recency ablation; returns a
    JSON-serializable report shaped like the model-comparison tables."""
    dataset = build_experiment_dataset(corpus, config)
    split = split_by_patient(dataset, config.split_ratio, config.seed)
    train_set = subset_by_patients(dataset, split.train_patients)
    test_set = subset_by_patients(dataset, split.test_patients)

    variants = {
        "chief_complaint_only": project_features(dataset, ["chief_complaint"]),
        "metadata_only": project_features(dataset, METADATA_BLOCKS),
        "metadata_bow": dataset,
    }

    classification: dict[str, dict] = {}
    retrieval: dict[str, dict] = {}
    models: dict[str, LogisticModel] = {}
    cv_info: dict[str, dict] = {}

    # recency baseline needs no training
    base_scores = baseline_scores(test_set, config.k)
    y_test = np.asarray([e.y for e in test_set.examples], dtype=np.float64)
    classification["baseline"] = classification_metrics(y_test, base_scores).to_dict()
    retrieval["baseline"] = retrieval_metrics(
        _session_rankings(test_set, base_scores), config.k).to_dict()

    for name, projected in variants.items():
        tr = subset_by_patients(projected, split.train_patients)
        te = subset_by_patients(projected, split.test_patients)
        lam = config.lam
        if config.use_cv:
            grid = config.lambda_grid or None
            cv = (crossval_tune(tr, lambda_grid=grid, seed=config.seed)
                  if grid else crossval_tune(tr, seed=config.seed))
            lam = cv.chosen_lambda
            cv_info[name] = {"chosen_lambda": lam,
                             "lambda_grid": list(cv.lambda_grid)}
        m = train(tr, lam)
        models[name] = m
        Xte, yte = examples_to_csr(te)
        probs = m.predict_proba(Xte)
        classification[name] = classification_metrics(yte, probs).to_dict()
        retrieval[name] = retrieval_metrics(
            _session_rankings(te, probs), config.k).to_dict()

    # ablation: drop examples within the most recent `cutoff` notes
    ablation: dict[str, dict] = {}
    for name in ("metadata_only", "metadata_bow"):
        abl = ablate_recent(variants[name], config.ablation_cutoff)
        tr = subset_by_patients(abl, split.train_patients)
        te = subset_by_patients(abl, split.test_patients)
        m = train(tr, models[name].lam)
        Xte, yte = examples_to_csr(te)
        probs = m.predict_proba(Xte)
        ablation[name] = classification_metrics(yte, probs).to_dict()

    full = models["metadata_bow"]
    weights = {
        "positive": top_weights(full, dataset.schema, config.top_n_weights, "+"),
        "negative": top_weights(full, dataset.schema, config.top_n_weights, "-"),
    }

    return {
        "config": {
            "seed": config.seed, "split_ratio": config.split_ratio,
            "lambda": config.lam, "use_cv": config.use_cv, "k": config.k,
            "ablation_cutoff": config.ablation_cutoff,
        },
        "dataset": {
            "n_examples": len(dataset), "n_positive": dataset.n_positive,
            "n_patients": len(dataset.patient_ids()),
            "total_dim": dataset.schema.total_dim,
            "schema_fingerprint": dataset.schema.fingerprint,
        },
        "split": {"n_train_patients": len(split.train_patients),
                  "n_test_patients": len(split.test_patients)},
        "classification": classification,
        "retrieval": retrieval,
        "ablation": ablation,
        "cv": cv_info,
        "top_weights": weights,
    }


_TABLE1_ROWS = (
    ("Original", "Chief complaint only", "classification", "chief_complaint_only"),
    ("Original", "Baseline", "classification", "baseline"),
    ("Original", "Metadata only", "classification", "metadata_only"),
    ("Original", "Metadata+BoW", "classification", "metadata_bow"),
    ("Ablation", "Metadata only", "ablation", "metadata_only"),
    ("Ablation", "Metadata+BoW", "ablation", "metadata_bow"),
)


def report_markdown(report: dict) -> str:
    """Render the report as the two comparison tables plus weight lists."""
    lines = ["## Classification", "",
             "| Task | Model | Precision | Recall | F1 | AUC |",
             "|---|---|---|---|---|---|"]
    for task, label, section, key in _TABLE1_ROWS:
        row = report[section].get(key)
        if row is None:
            continue
        auc = f"{row['auc']:.3f}" if row["auc"] is not None else "n/a"
        lines.append(f"| {task} | {label} | {row['precision']:.3f} "
                     f"| {row['recall']:.3f} | {row['f1']:.3f} | {auc} |")
    k = report["config"]["k"]
    lines += ["", "## Retrieval", "",
              f"| Model | Precision@{k} | Recall@{k} | F1@{k} |",
              "|---|---|---|---|"]
    for label, key in (("Baseline", "baseline"), ("Metadata only", "metadata_only"),
                       ("Metadata+BoW", "metadata_bow")):
        row = report["retrieval"].get(key)
        if row is None or row["precision_at_k"] is None:
            continue
        lines.append(f"| {label} | {row['precision_at_k']:.3f} "
                     f"| {row['recall_at_k']:.3f} | {row['f1_at_k']:.3f} |")
    lines += ["", "## Top weights (Metadata+BoW)", ""]
    for sign in ("positive", "negative"):
        lines.append(f"**{sign.capitalize()}**")
        for name, w in report["top_weights"][sign]:
            lines.append(f"- {name}: {w:+.3f}")
        lines.append("")
    return "\n".join(lines)
