"""Per-frame region descriptors: loading, max-min temporal pooling, region selection.

Descriptor files hold one frame descriptor per line::

    <sample id> <region index> <frame index> <dim> v1 ... vD

Region indices are 1-based (1..R).  One file per stream (RGB, flow, ...).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ._textio import check_id, format_vector, open_for_write
from .errors import FormatError
from .linear_svm import cross_validate

REGION_NAMES = {1: "left-hand", 2: "right-hand", 3: "upper-body", 4: "full-body", 5: "full-image"}


@dataclass(frozen=True, eq=False)
class RegionFrameDescriptor:
    sample_id: str
    region: int
    frame: int
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class PooledVideoDescriptor:
    sample_id: str
    region: int
    vector: np.ndarray  # max half then min half
    label: int | None = None


@dataclass
class RegionSelection:
    region: int
    accuracies: dict[int, float] = field(default_factory=dict)


class DescriptorStream(dict):
    """Frame descriptors grouped as ``{(sample_id, region): [descriptor, ...]}`` in frame order."""

    dim: int = 0

    @property
    def sample_ids(self) -> list[str]:
        return sorted({sid for sid, _ in self})

    @property
    def regions(self) -> list[int]:
        return sorted({r for _, r in self})

    @property
    def n_descriptors(self) -> int:
        return sum(len(v) for v in self.values())


def load_stream(path) -> DescriptorStream:
    stream = DescriptorStream()
    seen = set()
    dim = None
    groups = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                sid, region, frame, d = parts[0], int(parts[1]), int(parts[2]), int(parts[3])
                vec = np.array([float(v) for v in parts[4:]])
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed descriptor line ({exc})") from None
            if vec.size != d:
                raise FormatError(f"{path}:{lineno}: declared dimension {d}, found {vec.size} values")
            if dim is None:
                dim = d
            elif d != dim:
                raise FormatError(f"{path}:{lineno}: dimension {d} drifts from stream dimension {dim}")
            if region < 1:
                raise FormatError(f"{path}:{lineno}: region index must be >= 1")
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{lineno}: non-finite descriptor value")
            key = (sid, region, frame)
            if key in seen:
                raise FormatError(f"{path}:{lineno}: duplicate descriptor for sample {sid!r} region {region} frame {frame}")
            seen.add(key)
            groups[(sid, region)].append(RegionFrameDescriptor(sid, region, frame, vec))
    for key in sorted(groups):
        stream[key] = sorted(groups[key], key=lambda r: r.frame)
    stream.dim = dim or 0
    return stream


def write_stream(path, descriptors) -> None:
    with open_for_write(path) as fh:
        for d in descriptors:
            vec = np.asarray(d.vector, dtype=np.float64)
            fh.write(f"{check_id(d.sample_id)} {int(d.region)} {int(d.frame)} {vec.size} {format_vector(vec)}\n")


def maxmin_pool(frames, label: int | None = None) -> PooledVideoDescriptor:
    """Elementwise temporal max followed by elementwise temporal min."""
    frames = list(frames)
    if not frames:
        raise ValueError("max-min pooling needs at least one frame")
    if isinstance(frames[0], RegionFrameDescriptor):
        sid, region = frames[0].sample_id, frames[0].region
        mat = np.stack([f.vector for f in frames])
    else:
        sid, region = "", 0
        mat = np.asarray(frames, dtype=np.float64)
    return PooledVideoDescriptor(sid, region, np.concatenate([mat.max(axis=0), mat.min(axis=0)]), label)


def pool_stream(stream: DescriptorStream, labels: dict[str, int] | None = None) -> dict[int, dict[str, PooledVideoDescriptor]]:
    """``{region: {sample_id: pooled}}`` for every (sample, region) in the stream."""
    out: dict[int, dict[str, PooledVideoDescriptor]] = defaultdict(dict)
    for (sid, region), frames in stream.items():
        label = labels.get(sid) if labels else None
        out[region][sid] = maxmin_pool(frames, label)
    return dict(sorted(out.items()))


def write_pooled(path, pooled: dict[int, dict[str, PooledVideoDescriptor]]) -> None:
    """Pooled file: ``<sample id> <region> <dim> v1 ... v2D`` per line."""
    with open_for_write(path) as fh:
        for region, by_sample in pooled.items():
            for sid in sorted(by_sample):
                vec = by_sample[sid].vector
                fh.write(f"{check_id(sid)} {region} {vec.size} {format_vector(vec)}\n")


def read_pooled(path, labels: dict[str, int] | None = None) -> dict[int, dict[str, PooledVideoDescriptor]]:
    out: dict[int, dict[str, PooledVideoDescriptor]] = defaultdict(dict)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                sid, region, d = parts[0], int(parts[1]), int(parts[2])
                vec = np.array([float(v) for v in parts[3:]])
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed pooled line ({exc})") from None
            if vec.size != d:
                raise FormatError(f"{path}:{lineno}: declared dimension {d}, found {vec.size} values")
            out[region][sid] = PooledVideoDescriptor(sid, region, vec, labels.get(sid) if labels else None)
    return dict(sorted(out.items()))


def region_matrix(pooled: dict[str, PooledVideoDescriptor], sample_ids) -> np.ndarray:
    return np.stack([pooled[sid].vector for sid in sample_ids])


def concatenated_matrix(pooled: dict[int, dict[str, PooledVideoDescriptor]], sample_ids) -> np.ndarray:
    """All regions side by side, in region order."""
    return np.hstack([region_matrix(pooled[r], sample_ids) for r in sorted(pooled)])


def select_best_region(pooled: dict[int, dict[str, PooledVideoDescriptor]], labels: dict[str, int],
                       train_ids=None, groups: dict[str, int] | None = None, k: int = 5, C_reg: float = 1.0,
                       seed: int = 0, epochs: int = 100) -> RegionSelection:
    """Pick the region whose pooled descriptors cross-validate best on the training samples.

    Only ``train_ids`` (default: every labelled sample) are consulted.  Ties go
    to the lowest region index.
    """
    if not pooled:
        raise ValueError("no regions to select from")
    ids = sorted(train_ids) if train_ids is not None else sorted(labels)
    reference = None
    for region, by_sample in pooled.items():
        missing = [sid for sid in ids if sid not in by_sample]
        if missing:
            raise ValueError(f"region {region} lacks descriptors for {len(missing)} samples, e.g. {missing[0]!r}")
        covered = set(by_sample)
        if reference is None:
            reference = covered
        elif covered != reference:
            raise ValueError(f"region {region} covers a different sample set than region {min(pooled)}")
    y = np.array([labels[sid] for sid in ids])
    g = None if groups is None else np.array([groups[sid] for sid in ids])
    accuracies = {}
    for region in sorted(pooled):
        X = region_matrix(pooled[region], ids)
        accuracies[region] = cross_validate(X, y, g, k, C_reg, seed, epochs)
    return choose_region(accuracies)


def choose_region(accuracies: dict[int, float]) -> RegionSelection:
    best = max(sorted(accuracies), key=lambda r: (accuracies[r], -r))
    return RegionSelection(region=best, accuracies=dict(sorted(accuracies.items())))
