"""One-vs-rest linear SVM trained by stochastic subgradient descent (Pegasos).

Each class c minimises ``0.5 * ||w_c||^2 + C_reg * sum_i max(0, 1 - y_i (w_c . x_i + b_c))``.
With ``lambda = 1 / (C_reg * n)`` this is ``n * C_reg`` times the Pegasos
objective, so the Pegasos step ``eta_t = 1 / (lambda * t)`` applies directly.
The bias is learned as the weight of a constant input feature, which means it
is regularised together with ``w``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._textio import check_id, format_vector, open_for_write
from .errors import ConfigurationError, FormatError, ShapeError

BIAS_FEATURE = 1.0


@dataclass
class SvmModel:
    weights: np.ndarray  # (C, D)
    bias: np.ndarray     # (C,)
    C_reg: float = 1.0

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def to_dict(self) -> dict:
        return {
            "format": "deeptemporal-svm",
            "version": 1,
            "C_reg": self.C_reg,
            "n_classes": self.n_classes,
            "dim": self.dim,
            "weights": [[float(v) for v in row] for row in self.weights],
            "bias": [float(v) for v in self.bias],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        if d.get("format") != "deeptemporal-svm":
            raise FormatError("not an SVM model document")
        w = np.array(d["weights"], dtype=np.float64).reshape(d["n_classes"], d["dim"])
        return cls(weights=w, bias=np.array(d["bias"], dtype=np.float64), C_reg=float(d["C_reg"]))

    def save(self, path) -> None:
        with open_for_write(path) as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SvmModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ClassScores:
    scores: np.ndarray
    producer: str = ""

    @property
    def label(self) -> int:
        return int(np.argmax(self.scores))


def _as_matrix(features) -> np.ndarray:
    try:
        X = np.asarray(features, dtype=np.float64)
    except ValueError:
        raise ShapeError("feature vectors have inconsistent dimensions") from None
    if X.ndim != 2:
        raise ShapeError(f"expected a list of equal-length vectors, got shape {X.shape}")
    return X


def train_ovr(features, labels, C_reg: float = 1.0, epochs: int = 100, seed: int = 0,
              n_classes: int | None = None) -> SvmModel:
    """Seeded Pegasos over all one-vs-rest problems at once.

    Every class sees the same sample order, so the result equals training
    each binary problem separately with that order.
    """
    X = _as_matrix(features)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"{X.shape[0]} feature vectors but {y.shape[0]} labels")
    if len(np.unique(y)) < 2:
        raise ValueError("linear SVM needs at least two classes")
    if C_reg <= 0 or epochs < 1:
        raise ConfigurationError("C_reg and epochs must be positive")
    n, D = X.shape
    if n_classes is None:
        n_classes = int(y.max()) + 1
    Xa = np.hstack([X, np.full((n, 1), BIAS_FEATURE)])
    Y = np.where(y[:, None] == np.arange(n_classes)[None, :], 1.0, -1.0)  # (n, C)
    lam = 1.0 / (C_reg * n)
    W = np.zeros((n_classes, D + 1))
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            x, yi = Xa[i], Y[i]
            violated = yi * (W @ x) < 1.0
            W *= 1.0 - 1.0 / t
            if violated.any():
                W[violated] += eta * np.outer(yi[violated], x)
    return SvmModel(weights=W[:, :D].copy(), bias=W[:, D] * BIAS_FEATURE, C_reg=float(C_reg))


def decision_function(model: SvmModel, features) -> np.ndarray:
    X = _as_matrix(features)
    if X.shape[1] != model.dim:
        raise ShapeError(f"feature dimension {X.shape[1]} does not match model dimension {model.dim}")
    return X @ model.weights.T + model.bias


def predict_scores(model: SvmModel, x, producer: str = "svm") -> ClassScores:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.dim:
        raise ShapeError(f"feature shape {x.shape} does not match model dimension {model.dim}")
    return ClassScores(scores=model.weights @ x + model.bias, producer=producer)


def predict(model: SvmModel, features) -> np.ndarray:
    """Argmax labels; ``np.argmax`` already breaks ties towards the lowest index."""
    return decision_function(model, features).argmax(axis=1)


def accuracy(pred, labels) -> float:
    pred, labels = np.asarray(pred), np.asarray(labels)
    return float(np.mean(pred == labels)) if len(labels) else float("nan")


def cv_folds(labels, k: int, groups=None, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays for k folds.

    With ``groups`` the folds are group-disjoint (groups shuffled, then dealt
    round-robin); otherwise stratified by label.
    """
    y = np.asarray(labels)
    n = len(y)
    if k < 2:
        raise ValueError("cross-validation needs k >= 2")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} samples")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    if groups is not None:
        g = np.asarray(groups)
        uniq = np.unique(g)
        if k > len(uniq):
            raise ValueError(f"k={k} folds but only {len(uniq)} groups")
        order = rng.permutation(uniq)
        group_fold = {grp: f % k for f, grp in enumerate(order)}
        fold_of[:] = [group_fold[v] for v in g]
    else:
        offset = 0
        for cls in np.unique(y):
            idx = rng.permutation(np.flatnonzero(y == cls))
            fold_of[idx] = (np.arange(len(idx)) + offset) % k
            offset += len(idx)
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def cross_validate(features, labels, groups=None, k: int = 5, C_reg: float = 1.0, seed: int = 0,
                   epochs: int = 100) -> float:
    """Mean held-out-fold accuracy of ``train_ovr``."""
    X = _as_matrix(features)
    y = np.asarray(labels, dtype=np.int64)
    n_classes = int(y.max()) + 1
    scores = []
    for test_idx in cv_folds(y, k, groups, seed):
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        model = train_ovr(X[train_mask], y[train_mask], C_reg, epochs, seed, n_classes=n_classes)
        scores.append(accuracy(predict(model, X[test_idx]), y[test_idx]))
    return float(np.mean(scores))


def select_C(features, labels, grid=(0.01, 0.1, 1.0, 10.0), groups=None, k: int = 5, seed: int = 0,
             epochs: int = 100) -> tuple[float, dict[float, float]]:
    """Pick C_reg from ``grid`` by cross-validated accuracy (first best wins)."""
    results = {float(C): cross_validate(features, labels, groups, k, C, seed, epochs) for C in grid}
    best = max(results, key=lambda C: (results[C], -list(results).index(C)))
    return best, results


# score file: "<id> <producer> s1 ... sC"


def write_score_file(path, rows) -> None:
    """``rows`` yields (id, ClassScores)."""
    with open_for_write(path) as fh:
        for sid, cs in rows:
            producer = cs.producer or "unknown"
            if any(ch.isspace() for ch in producer):
                raise FormatError(f"producer tag {producer!r} contains whitespace")
            fh.write(f"{check_id(sid)} {producer} {format_vector(cs.scores)}\n")


def read_score_file(path) -> dict[str, ClassScores]:
    out: dict[str, ClassScores] = {}
    n_classes = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) < 3:
                raise FormatError(f"{path}:{lineno}: score line needs id, producer and scores")
            try:
                scores = np.array([float(v) for v in parts[2:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if not np.all(np.isfinite(scores)):
                raise FormatError(f"{path}:{lineno}: non-finite score")
            if n_classes is not None and scores.size != n_classes:
                raise FormatError(f"{path}:{lineno}: {scores.size} scores, expected {n_classes}")
            if parts[0] in out:
                raise FormatError(f"{path}:{lineno}: duplicate sample id {parts[0]!r}")
            n_classes = scores.size
            out[parts[0]] = ClassScores(scores=scores, producer=parts[1])
    return out
