"""Canonical skeleton dataset format: parsing, validation, padding and splits.

A skeleton file is UTF-8 text with one JSON object per line::

    {"id": "s001", "subject": 3, "label": 1, "frames": [[[x, y, z], ...], ...]}

``frames`` is a T x J x 3 array.  NaN and infinities are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, ParseError, SplitError


@dataclass(frozen=True)
class JointRoleMap:
    """Indices of the joints that define the body frame."""

    hip_center: int
    hip_left: int
    hip_right: int
    spine_base: int
    spine: int
    joint_count: int

    def __post_init__(self):
        if self.joint_count <= 0:
            raise ConfigurationError(f"joint_count must be positive, got {self.joint_count}")
        roles = self.as_dict()
        for name, idx in roles.items():
            if not 0 <= idx < self.joint_count:
                raise ConfigurationError(
                    f"role {name}={idx} outside [0, {self.joint_count - 1}]"
                )
        if len(set(roles.values())) != len(roles):
            raise ConfigurationError(f"role indices must be distinct: {roles}")

    def as_dict(self) -> dict[str, int]:
        return {
            "hip_center": self.hip_center,
            "hip_left": self.hip_left,
            "hip_right": self.hip_right,
            "spine_base": self.spine_base,
            "spine": self.spine,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointRoleMap":
        try:
            return cls(**{k: int(d[k]) for k in (
                "hip_center", "hip_left", "hip_right", "spine_base", "spine", "joint_count")})
        except KeyError as exc:
            raise ConfigurationError(f"joint role map missing {exc.args[0]!r}") from None


# Kinect v1 (20 joints): HipCenter, Spine, ShoulderCenter, HipLeft, HipRight.
KINECT_V1_ROLES = JointRoleMap(
    hip_center=0, spine_base=1, spine=2, hip_left=12, hip_right=16, joint_count=20
)
# Kinect v2 (25 joints): SpineBase, SpineMid, SpineShoulder, HipLeft, HipRight.
KINECT_V2_ROLES = JointRoleMap(
    hip_center=0, spine_base=1, spine=20, hip_left=12, hip_right=16, joint_count=25
)

DEFAULT_ROLES = {"kinect-v1": KINECT_V1_ROLES, "kinect-v2": KINECT_V2_ROLES}


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    id: str
    subject: int
    label: int
    frames: np.ndarray  # (T, J, 3), read-only

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise DimensionError(f"frames must be T x J x 3, got shape {frames.shape}")
        if frames.shape[0] < 1:
            raise DimensionError("sequence needs at least one frame")
        if frames.shape[1] < 1:
            raise DimensionError("frames need at least one joint")
        if not np.all(np.isfinite(frames)):
            raise ParseError("frames contain non-finite coordinates")
        if self.label < 0:
            raise ParseError(f"label must be >= 0, got {self.label}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_joints(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SkeletonSequence):
            return NotImplemented
        return (
            self.id == other.id
            and self.subject == other.subject
            and self.label == other.label
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )

    __hash__ = None


@dataclass(frozen=True)
class DatasetSplit:
    train: list[str]
    test: list[str]


def _reject_constant(name):
    raise ParseError(f"non-finite number {name!r} not allowed")


def _field(record: dict, name: str, kind):
    if name not in record:
        raise ParseError(f"record missing field {name!r}")
    value = record[name]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"field {name!r} must be an integer, got {value!r}")
    elif not isinstance(value, kind):
        raise ParseError(f"field {name!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def parse_sequence(line: str) -> SkeletonSequence:
    """Parse one record of the canonical skeleton format."""
    try:
        record = json.loads(line, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed record: {exc}") from None
    if not isinstance(record, dict):
        raise ParseError("record must be a JSON object")
    sid = _field(record, "id", str)
    subject = _field(record, "subject", int)
    label = _field(record, "label", int)
    frames = _field(record, "frames", list)
    if not frames:
        raise ParseError("field 'frames' is empty")

    n_joints = None
    for t, frame in enumerate(frames):
        if not isinstance(frame, list):
            raise ParseError(f"frame {t} is not a list of joints")
        if n_joints is None:
            n_joints = len(frame)
        elif len(frame) != n_joints:
            raise DimensionError(f"frame {t} has {len(frame)} joints, expected {n_joints}")
        for j, joint in enumerate(frame):
            if not isinstance(joint, list) or len(joint) != 3:
                raise DimensionError(f"frame {t} joint {j} is not an (x, y, z) triple")
            for v in joint:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ParseError(f"frame {t} joint {j} has non-numeric coordinate {v!r}")
                if not math.isfinite(v):
                    raise ParseError(f"frame {t} joint {j} has non-finite coordinate")
    return SkeletonSequence(id=sid, subject=subject, label=label, frames=np.array(frames, dtype=np.float64))


def serialize_sequence(seq: SkeletonSequence) -> str:
    record = {
        "id": seq.id,
        "subject": int(seq.subject),
        "label": int(seq.label),
        "frames": seq.frames.tolist(),
    }
    return json.dumps(record, allow_nan=False, separators=(",", ":"))


def read_skeleton_file(path) -> list[SkeletonSequence]:
    sequences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                sequences.append(parse_sequence(line))
            except (ParseError, DimensionError) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from None
    return sequences


def write_skeleton_file(path, sequences: Iterable[SkeletonSequence]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in sequences:
            fh.write(serialize_sequence(seq))
            fh.write("\n")


def validate_roles(seq: SkeletonSequence, roles: JointRoleMap) -> None:
    """Raise ConfigurationError unless every role index addresses a joint of ``seq``."""
    if len(set(roles.as_dict().values())) != 5:
        raise ConfigurationError("role indices must be distinct")
    for name, idx in roles.as_dict().items():
        if not 0 <= idx < seq.n_joints:
            raise ConfigurationError(
                f"role {name}={idx} out of range for sequence {seq.id!r} with {seq.n_joints} joints"
            )


def pad_or_truncate(vectors: Sequence, target_T: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad or truncate a frame-vector list to exactly ``target_T`` rows.

    Over-length input keeps its earliest frames.  The mask is True at real frames.
    """
    if target_T < 1:
        raise ValueError(f"target_T must be positive, got {target_T}")
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise DimensionError(f"expected a non-empty (T, D) array, got shape {arr.shape}")
    n = min(arr.shape[0], target_T)
    out = np.zeros((target_T, arr.shape[1]))
    out[:n] = arr[:n]
    mask = np.zeros(target_T, dtype=bool)
    mask[:n] = True
    return out, mask


def cross_subject_split(samples: Sequence[SkeletonSequence], test_subjects) -> DatasetSplit:
    test_subjects = set(test_subjects)
    if not test_subjects:
        raise SplitError("test_subjects must be non-empty")
    train = [s.id for s in samples if s.subject not in test_subjects]
    test = [s.id for s in samples if s.subject in test_subjects]
    if not train:
        raise SplitError("cross-subject split leaves the training side empty")
    if not test:
        raise SplitError(f"no samples from test subjects {sorted(test_subjects)}")
    return DatasetSplit(train=train, test=test)
