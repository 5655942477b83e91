"""L2-regularized logistic regression over sparse examples: patient-level
splitting, cross-validated regularization, deterministic training, probability
prediction, and weight inspection."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from .featurizer import ExampleSet, FeatureSchema
from .textfeat import SparseVector

DEFAULT_LAMBDA_GRID = tuple(float(x) for x in np.logspace(-6, 0, 7))


def examples_to_csr(example_set: ExampleSet) -> tuple[sp.csr_matrix, np.ndarray]:
    n = len(example_set.examples)
    dim = example_set.schema.total_dim
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i, e in enumerate(example_set.examples):
        indices.extend(e.x.indices)
        indptr[i + 1] = len(indices)
    data = np.ones(len(indices), dtype=np.float64)
    X = sp.csr_matrix((data, np.asarray(indices, dtype=np.int64), indptr), shape=(n, dim))
    y = np.asarray([e.y for e in example_set.examples], dtype=np.float64)
    return X, y


def stable_sigmoid(s: np.ndarray | float) -> np.ndarray | float:
    s = np.asarray(s, dtype=np.float64)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out if out.ndim else float(out)


def objective_and_grad(theta: np.ndarray, X: sp.csr_matrix, y: np.ndarray,
                       lam: float) -> tuple[float, np.ndarray]:
    """Mean logistic loss + (lam/2)*||w||^2; bias (last coordinate) unregularized.

    theta = [w (dim), b]; y in {0, 1}.
    """
    n = X.shape[0]
    w, b = theta[:-1], theta[-1]
    s = X.dot(w) + b
    ysign = 2.0 * y - 1.0
    z = -ysign * s
    # log(1 + exp(z)) without overflow
    loss = float(np.mean(np.logaddexp(0.0, z)))
    obj = loss + 0.5 * lam * float(w @ w)
    p = stable_sigmoid(s)
    r = (p - y) / n
    grad = np.empty_like(theta)
    grad[:-1] = X.T.dot(r) + lam * w
    grad[-1] = float(np.sum(r))
    return obj, grad


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    lam: float
    schema_fingerprint: str
    n_iterations: int = 0
    final_objective: float = 0.0
    metadata: dict = field(default_factory=dict)

    def scores(self, X: sp.csr_matrix) -> np.ndarray:
        if X.shape[1] != self.weights.shape[0]:
            raise ValueError("feature dimension mismatch")
        return X.dot(self.weights) + self.bias

    def predict_proba_sparse(self, x: SparseVector) -> float:
        if x.dimension != self.weights.shape[0]:
            raise ValueError("feature dimension mismatch")
        s = float(self.weights[list(x.indices)].sum()) + self.bias
        return float(stable_sigmoid(s))

    def predict_proba(self, X: sp.csr_matrix) -> np.ndarray:
        return stable_sigmoid(self.scores(X))

    def save(self, path: str | Path) -> None:
        header = json.dumps({
            "schema_fingerprint": self.schema_fingerprint,
            "lambda": self.lam,
            "bias": self.bias,
            "n_iterations": self.n_iterations,
            "final_objective": self.final_objective,
            "metadata": self.metadata,
            "dim": int(self.weights.shape[0]),
        }, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(self.weights.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "LogisticModel":
        with open(path, "rb") as fh:
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode("utf-8"))
            weights = np.frombuffer(fh.read(8 * header["dim"]), dtype="<f8").copy()
        return cls(
            weights=weights, bias=header["bias"], lam=header["lambda"],
            schema_fingerprint=header["schema_fingerprint"],
            n_iterations=header["n_iterations"],
            final_objective=header["final_objective"],
            metadata=header.get("metadata", {}),
        )


def train(example_set: ExampleSet, lam: float, tolerance: float = 1e-7,
          max_iters: int = 500) -> LogisticModel:
    """Deterministic full-batch training (L-BFGS) to the convergence contract:
    relative objective change < tolerance or gradient inf-norm < 1e-6."""
    X, y = examples_to_csr(example_set)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise ValueError("training data must contain both classes")
    theta0 = np.zeros(X.shape[1] + 1, dtype=np.float64)
    result = scipy.optimize.minimize(
        objective_and_grad, theta0, args=(X, y, lam), jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iters, "ftol": tolerance, "gtol": 1e-6},
    )
    theta = result.x
    return LogisticModel(
        weights=theta[:-1].copy(), bias=float(theta[-1]), lam=lam,
        schema_fingerprint=example_set.schema.fingerprint,
        n_iterations=int(result.nit), final_objective=float(result.fun),
        metadata={"n_examples": len(y), "n_positive": n_pos},
    )


@dataclass(frozen=True)
class SplitSpec:
    train_patients: tuple[str, ...]
    test_patients: tuple[str, ...]
    seed: int
    ratio: float


def split_by_patient(example_set: ExampleSet, ratio: float = 0.8,
                     seed: int = 0) -> SplitSpec:
    """Deterministic patient-level split; no patient straddles the boundary."""
    patients = example_set.patient_ids()
    if len(patients) < 2:
        raise ValueError("need at least 2 patients to split")
    n_train = round(len(patients) * ratio)
    if n_train <= 0 or n_train >= len(patients):
        raise ValueError(f"ratio {ratio} leaves an empty split side")
    shuffled = list(patients)
    Random(seed).shuffle(shuffled)
    return SplitSpec(
        train_patients=tuple(sorted(shuffled[:n_train])),
        test_patients=tuple(sorted(shuffled[n_train:])),
        seed=seed, ratio=ratio,
    )


def subset_by_patients(example_set: ExampleSet, patients: tuple[str, ...]) -> ExampleSet:
    wanted = set(patients)
    kept = tuple(e for e in example_set.examples if e.patient_id in wanted)
    return ExampleSet(kept, example_set.schema, dict(example_set.provenance))


@dataclass(frozen=True)
class CVResult:
    lambda_grid: tuple[float, ...]
    fold_aucs: tuple[tuple[float | None, ...], ...]  # [lambda][fold]
    chosen_lambda: float
    warnings: tuple[str, ...] = ()


def crossval_tune(example_set: ExampleSet, folds: int = 5,
                  lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID,
                  seed: int = 0) -> CVResult:
    """Patient-level k-fold CV; chosen lambda maximizes mean held-out AUC
    (ties resolved toward the larger lambda)."""
    from .evaluation import auc_score  # deferred: avoids import cycle

    if folds < 2:
        raise ValueError("folds must be >= 2")
    if not lambda_grid:
        raise ValueError("empty lambda grid")
    patients = example_set.patient_ids()
    shuffled = list(patients)
    Random(seed).shuffle(shuffled)
    fold_of = {p: i % folds for i, p in enumerate(shuffled)}

    fold_sets = []
    for k in range(folds):
        val_p = tuple(p for p in patients if fold_of[p] == k)
        tr_p = tuple(p for p in patients if fold_of[p] != k)
        fold_sets.append((subset_by_patients(example_set, tr_p),
                          subset_by_patients(example_set, val_p)))

    warnings: list[str] = []
    all_aucs: list[tuple[float | None, ...]] = []
    for lam in lambda_grid:
        aucs: list[float | None] = []
        for k, (tr, val) in enumerate(fold_sets):
            try:
                m = train(tr, lam)
            except ValueError:
                aucs.append(None)
                warnings.append(f"fold {k}: single-class training data")
                continue
            Xv, yv = examples_to_csr(val)
            if yv.sum() in (0, len(yv)):
                aucs.append(None)
                warnings.append(f"fold {k}: single-class validation data")
                continue
            aucs.append(auc_score(yv, m.scores(Xv)))
        all_aucs.append(tuple(aucs))

    def mean_auc(row: tuple[float | None, ...]) -> float:
        vals = [a for a in row if a is not None]
        return sum(vals) / len(vals) if vals else float("-inf")

    best = max(range(len(lambda_grid)),
               key=lambda i: (mean_auc(all_aucs[i]), lambda_grid[i]))
    return CVResult(tuple(lambda_grid), tuple(all_aucs),
                    chosen_lambda=float(lambda_grid[best]),
                    warnings=tuple(dict.fromkeys(warnings)))


def top_weights(model: LogisticModel, schema: FeatureSchema, n: int,
                sign: str = "+") -> list[tuple[str, float]]:
    """The n largest-positive or most-negative nonzero weights with
    block-qualified feature names."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    w = model.weights
    if sign == "+":
        order = np.argsort(-w, kind="stable")
        picked = [i for i in order[:n] if w[i] > 0]
    else:
        order = np.argsort(w, kind="stable")
        picked = [i for i in order[:n] if w[i] < 0]
    return [(schema.feature_name(int(i)), float(w[i])) for i in picked]
