"""Late fusion of per-classifier score vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._textio import check_id, format_vector, open_for_write
from .errors import AlignmentError, ConfigurationError, FormatError, ShapeError
from .linear_svm import ClassScores

SOFTMAX = "softmax"
MINMAX = "min-max"
NONE = "none"
NORMALIZATIONS = (SOFTMAX, MINMAX, NONE)


@dataclass
class FusionConfig:
    weights: dict[str, float] = field(default_factory=dict)  # producer -> weight, default 1
    normalization: str | dict[str, str] = SOFTMAX

    def __post_init__(self):
        modes = self.normalization.values() if isinstance(self.normalization, dict) else [self.normalization]
        for mode in modes:
            if mode not in NORMALIZATIONS:
                raise ConfigurationError(f"unknown score normalization {mode!r}")
        if any(w < 0 for w in self.weights.values()):
            raise ConfigurationError("fusion weights must be non-negative")

    def weight(self, producer: str) -> float:
        return float(self.weights.get(producer, 1.0))

    def mode(self, producer: str) -> str:
        if isinstance(self.normalization, dict):
            return self.normalization.get(producer, SOFTMAX)
        return self.normalization


def normalize_scores(s: ClassScores, mode: str = SOFTMAX) -> ClassScores:
    x = np.asarray(s.scores, dtype=np.float64)
    if mode == SOFTMAX:
        e = np.exp(x - x.max())
        out = e / e.sum()
    elif mode == MINMAX:
        lo, hi = x.min(), x.max()
        out = np.full_like(x, 1.0 / x.size) if hi == lo else (x - lo) / (hi - lo)
    elif mode == NONE:
        out = x.copy()
    else:
        raise ConfigurationError(f"unknown score normalization {mode!r}")
    return ClassScores(scores=out, producer=s.producer)


def fuse(streams, config: FusionConfig | None = None) -> tuple[ClassScores, int]:
    """Weighted mean of normalised score vectors for one sample."""
    config = config or FusionConfig()
    streams = list(streams)
    if not streams:
        raise AlignmentError("no score streams to fuse")
    n_classes = {len(s.scores) for s in streams}
    if len(n_classes) != 1:
        raise ShapeError(f"score streams disagree on class count: {sorted(n_classes)}")
    # accumulate in producer order so the result does not depend on stream order
    streams = sorted(streams, key=lambda s: (s.producer, tuple(np.asarray(s.scores, dtype=float))))
    weights = np.array([config.weight(s.producer) for s in streams])
    if weights.sum() <= 0:
        raise ConfigurationError("fusion weights must not all be zero")
    total = np.zeros(n_classes.pop())
    for w, s in zip(weights, streams):
        total += w * normalize_scores(s, config.mode(s.producer)).scores
    fused = total / weights.sum()
    return ClassScores(scores=fused, producer="fused"), int(np.argmax(fused))


def fuse_files(score_maps: list[dict[str, ClassScores]], config: FusionConfig | None = None,
               sample_ids=None) -> dict[str, tuple[ClassScores, int]]:
    """Fuse aligned score maps ``{sample_id: ClassScores}``; every stream must cover every sample."""
    if not score_maps:
        raise AlignmentError("no score streams to fuse")
    ids = sorted(sample_ids) if sample_ids is not None else sorted(set().union(*score_maps))
    out = {}
    for sid in ids:
        missing = [k for k, m in enumerate(score_maps) if sid not in m]
        if missing:
            raise AlignmentError(f"sample {sid!r} missing from score stream(s) {missing}")
        out[sid] = fuse([m[sid] for m in score_maps], config)
    return out


# prediction file: "<id> <C> s1 ... sC <predicted> <true label or ->", plus a "# accuracy=..." summary


def write_predictions(path, predictions: dict[str, tuple[ClassScores, int]], labels: dict[str, int] | None = None) -> float | None:
    labels = labels or {}
    correct = total = 0
    with open_for_write(path) as fh:
        for sid in sorted(predictions):
            scores, pred = predictions[sid]
            true = labels.get(sid)
            fh.write(f"{check_id(sid)} {len(scores.scores)} {format_vector(scores.scores)} {pred} "
                     f"{'-' if true is None else int(true)}\n")
            if true is not None:
                total += 1
                correct += int(pred == true)
        if total:
            acc = correct / total
            fh.write(f"# accuracy={acc!r} correct={correct} total={total}\n")
            return acc
    return None


@dataclass
class PredictionRecord:
    sample_id: str
    scores: np.ndarray
    predicted: int
    label: int | None


def read_predictions(path) -> list[PredictionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                c = int(parts[1])
                scores = np.array([float(v) for v in parts[2:2 + c]])
                pred = int(parts[2 + c])
                true = None if parts[3 + c] == "-" else int(parts[3 + c])
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed prediction line ({exc})") from None
            if len(parts) != 4 + c:
                raise FormatError(f"{path}:{lineno}: expected {4 + c} fields, found {len(parts)}")
            records.append(PredictionRecord(parts[0], scores, pred, true))
    return records


def prediction_accuracy(records) -> float | None:
    scored = [r for r in records if r.label is not None]
    if not scored:
        return None
    return sum(r.predicted == r.label for r in scored) / len(scored)
