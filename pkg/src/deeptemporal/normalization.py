"""Body-centred view normalization of 3D skeletons.

Each frame is translated so the hip centre sits at the origin, rotated so the
right-hip -> left-hip direction is +X and the spine points along +Y, and scaled
by the spine-base -> spine distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrameError
from .skeleton_data import JointRoleMap, SkeletonSequence, pad_or_truncate, validate_roles

EPS = 1e-8

PER_FRAME = "per-frame"
FIRST_FRAME = "first-frame"


@dataclass(frozen=True, eq=False)
class BodyTransform:
    origin: np.ndarray    # (3,)
    rotation: np.ndarray  # (3, 3), columns are the body x, y, z axes
    scale: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map camera-frame points (..., 3) into the body frame."""
        return (np.asarray(points) - self.origin) @ self.rotation / self.scale


IDENTITY_TRANSFORM = BodyTransform(origin=np.zeros(3), rotation=np.eye(3), scale=1.0)


@dataclass(frozen=True, eq=False)
class NormalizedSequence:
    vectors: np.ndarray  # (T, 3J)
    mask: np.ndarray     # (T,) bool
    label: int
    id: str = ""
    subject: int = 0

    @property
    def n_frames(self) -> int:
        return self.vectors.shape[0]


def _axes(frame: np.ndarray, roles: JointRoleMap):
    """Return (rotation, scale) or None when the frame geometry is degenerate."""
    hip_vec = frame[roles.hip_left] - frame[roles.hip_right]
    spine_vec = frame[roles.spine] - frame[roles.spine_base]
    hip_norm = np.linalg.norm(hip_vec)
    spine_norm = np.linalg.norm(spine_vec)
    if hip_norm < EPS or spine_norm < EPS:
        return None
    x = hip_vec / hip_norm
    if np.linalg.norm(np.cross(x, spine_vec / spine_norm)) < EPS:
        return None
    y = spine_vec - np.dot(spine_vec, x) * x
    y /= np.linalg.norm(y)
    z = np.cross(x, y)
    return np.column_stack([x, y, z]), float(spine_norm)


def build_body_transform(frame, roles: JointRoleMap, fallback: BodyTransform | None = None) -> BodyTransform:
    frame = np.asarray(frame, dtype=np.float64)
    axes = _axes(frame, roles)
    if axes is None:
        if fallback is not None:
            return fallback
        raise DegenerateFrameError("hip or spine vector is degenerate and no fallback was given")
    rotation, scale = axes
    return BodyTransform(origin=frame[roles.hip_center].copy(), rotation=rotation, scale=scale)


def frame_transforms(seq: SkeletonSequence, roles: JointRoleMap, mode: str = PER_FRAME) -> list[BodyTransform]:
    """One transform per frame.

    Degenerate frames reuse the previous frame's transform; in per-frame mode a
    degenerate first frame falls back to the identity.
    """
    if mode == FIRST_FRAME:
        first = build_body_transform(seq.frames[0], roles)
        return [first] * seq.n_frames
    if mode != PER_FRAME:
        raise ValueError(f"unknown normalization mode {mode!r}")
    transforms = []
    previous = IDENTITY_TRANSFORM
    for frame in seq.frames:
        previous = build_body_transform(frame, roles, fallback=previous)
        transforms.append(previous)
    return transforms


def normalize_sequence(seq: SkeletonSequence, roles: JointRoleMap, mode: str = PER_FRAME,
                       target_T: int | None = None) -> NormalizedSequence:
    validate_roles(seq, roles)
    transforms = frame_transforms(seq, roles, mode)
    body = np.stack([tf.apply(frame) for tf, frame in zip(transforms, seq.frames)])
    flat = body.reshape(seq.n_frames, -1)  # joint-major: x0 y0 z0 x1 y1 z1 ...
    vectors, mask = pad_or_truncate(flat, target_T or seq.n_frames)
    return NormalizedSequence(vectors=vectors, mask=mask, label=seq.label, id=seq.id, subject=seq.subject)


def normalize_dataset(sequences, roles: JointRoleMap, mode: str = PER_FRAME, target_T: int | None = None):
    if target_T is None:
        target_T = max(s.n_frames for s in sequences)
    return [normalize_sequence(s, roles, mode, target_T) for s in sequences]


def stack_batch(items) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack normalized sequences into (N, T, D) inputs, (N, T) masks and (N,) labels."""
    x = np.stack([it.vectors for it in items])
    masks = np.stack([it.mask for it in items])
    labels = np.array([it.label for it in items], dtype=np.int64)
    return x, masks, labels
