"""Top-layer LSTM hidden states as a fixed-size video representation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySequenceError, FormatError, ShapeError
from ._textio import check_id, format_vector, open_for_write
from .lstm_core import LstmParams, forward_sequence, last_real_index
from .normalization import NormalizedSequence

FLATTEN_TIME = "flatten-time"
MEAN_OVER_TIME = "mean-over-time"
LAST_STEP = "last-step"
LAYOUTS = (FLATTEN_TIME, MEAN_OVER_TIME, LAST_STEP)


@dataclass(frozen=True, eq=False)
class LatentFeatureMatrix:
    hidden: np.ndarray  # (T, H_L)
    mask: np.ndarray    # (T,) bool
    label: int
    id: str = ""
    subject: int = 0


def extract_latents(seq: NormalizedSequence, params: LstmParams) -> LatentFeatureMatrix:
    """Inference-mode top-layer hidden states for every timestep."""
    if seq.vectors.ndim != 2 or seq.vectors.shape[1] != params.input_dim:
        raise ShapeError(f"sequence dimension {seq.vectors.shape} does not match network input {params.input_dim}")
    tape = forward_sequence(seq.vectors, params, training=False)
    return LatentFeatureMatrix(hidden=tape.top_hidden[0], mask=np.asarray(seq.mask, dtype=bool),
                               label=seq.label, id=seq.id, subject=seq.subject)


def extract_dataset(sequences, params: LstmParams) -> list[LatentFeatureMatrix]:
    """Batched ``extract_latents`` (equal to the per-sample call up to BLAS summation order)."""
    if not sequences:
        return []
    x = np.stack([s.vectors for s in sequences])
    if x.shape[2] != params.input_dim:
        raise ShapeError(f"sequence dimension {x.shape[2]} does not match network input {params.input_dim}")
    hidden = forward_sequence(x, params, training=False).top_hidden
    return [LatentFeatureMatrix(hidden=h, mask=np.asarray(s.mask, dtype=bool), label=s.label, id=s.id,
                                subject=s.subject)
            for h, s in zip(hidden, sequences)]


def to_classifier_vector(m: LatentFeatureMatrix, layout: str = FLATTEN_TIME) -> np.ndarray:
    mask = np.asarray(m.mask, dtype=bool)
    if not mask.any():
        raise EmptySequenceError("all timesteps are masked")
    if layout == FLATTEN_TIME:
        return np.where(mask[:, None], m.hidden, 0.0).ravel()
    if layout == MEAN_OVER_TIME:
        return m.hidden[mask].mean(axis=0)
    if layout == LAST_STEP:
        return m.hidden[last_real_index(mask[None])[0]].copy()
    raise ValueError(f"unknown feature layout {layout!r}")


# feature dump: "<id> <label> <layout> <dim> v1 ... vD", one sample per line


def write_feature_dump(path, rows) -> None:
    """``rows`` yields (id, label, layout, vector)."""
    with open_for_write(path) as fh:
        for sid, label, layout, vec in rows:
            vec = np.asarray(vec, dtype=np.float64)
            fh.write(f"{check_id(sid)} {int(label)} {layout} {vec.size} {format_vector(vec)}\n")


def read_feature_dump(path) -> list[tuple[str, int, str, np.ndarray]]:
    rows = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                sid, label, layout, d = parts[0], int(parts[1]), parts[2], int(parts[3])
                vec = np.array([float(v) for v in parts[4:]])
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed feature line ({exc})") from None
            if vec.size != d:
                raise FormatError(f"{path}:{lineno}: declared dimension {d}, found {vec.size} values")
            if dim is not None and d != dim:
                raise FormatError(f"{path}:{lineno}: dimension {d} differs from earlier {dim}")
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{lineno}: non-finite feature value")
            dim = d
            rows.append((sid, label, layout, vec))
    return rows
