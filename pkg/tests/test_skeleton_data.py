import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_array_equal

from deeptemporal.errors import ConfigurationError, DimensionError, ParseError, SplitError
from deeptemporal.skeleton_data import (
    DEFAULT_ROLES, JointRoleMap, SkeletonSequence, cross_subject_split, pad_or_truncate, parse_sequence,
    read_skeleton_file, serialize_sequence, validate_roles, write_skeleton_file,
)


def record(**over):
    rec = {"id": "a1", "subject": 1, "label": 2, "frames": [[[0, 0, 0], [1, 2, 3]], [[0, 1, 0], [4, 5, 6]]]}
    rec.update(over)
    return json.dumps(rec)


def test_parse_well_formed():
    seq = parse_sequence(record())
    assert (seq.n_frames, seq.n_joints) == (2, 2)
    assert seq.id == "a1" and seq.subject == 1 and seq.label == 2
    assert_array_equal(seq.frames[1, 1], [4, 5, 6])


def test_parse_missing_label_names_field():
    rec = json.loads(record())
    del rec["label"]
    with pytest.raises(ParseError, match="label"):
        parse_sequence(json.dumps(rec))


def test_parse_ragged_frame_names_frame():
    frames = [[[0, 0, 0], [1, 2, 3]], [[0, 1, 0]]]
    with pytest.raises(DimensionError, match="frame 1"):
        parse_sequence(record(frames=frames))


@pytest.mark.parametrize("bad", ["NaN", "Infinity", "-Infinity"])
def test_parse_rejects_non_finite(bad):
    line = record().replace("[4, 5, 6]", f"[4, 5, {bad}]")
    with pytest.raises(ParseError):
        parse_sequence(line)


def test_parse_rejects_garbage():
    with pytest.raises(ParseError):
        parse_sequence("{not json")


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5), st.data())
def test_round_trip(T, J, data):
    vals = data.draw(st.lists(finite, min_size=T * J * 3, max_size=T * J * 3))
    seq = SkeletonSequence(id="x_1", subject=3, label=1, frames=np.array(vals).reshape(T, J, 3))
    again = parse_sequence(serialize_sequence(seq))
    assert again == seq
    assert parse_sequence(serialize_sequence(again)) == seq


def test_file_round_trip(tmp_path, rng):
    seqs = [SkeletonSequence(f"s{k}", k % 2 + 1, k, rng.normal(size=(3, 4, 3))) for k in range(3)]
    write_skeleton_file(tmp_path / "d" / "s.jsonl", seqs)
    assert read_skeleton_file(tmp_path / "d" / "s.jsonl") == seqs


def test_sequence_is_read_only(rng):
    seq = SkeletonSequence("a", 1, 0, rng.normal(size=(2, 3, 3)))
    with pytest.raises(ValueError):
        seq.frames[0, 0, 0] = 1.0


def test_validate_roles_ok():
    seq = SkeletonSequence("a", 1, 0, np.zeros((1, 25, 3)))
    validate_roles(seq, DEFAULT_ROLES["kinect-v2"])


def test_validate_roles_out_of_range():
    seq = SkeletonSequence("a", 1, 0, np.zeros((1, 20, 3)))
    roles = JointRoleMap(hip_center=0, hip_left=12, hip_right=16, spine_base=1, spine=24, joint_count=25)
    with pytest.raises(ConfigurationError):
        validate_roles(seq, roles)


def test_duplicate_roles_rejected():
    with pytest.raises(ConfigurationError):
        JointRoleMap(hip_center=0, hip_left=5, hip_right=5, spine_base=1, spine=2, joint_count=20)


def test_default_role_maps_are_valid():
    for name, roles in DEFAULT_ROLES.items():
        idx = [roles.hip_center, roles.hip_left, roles.hip_right, roles.spine_base, roles.spine]
        assert len(set(idx)) == 5 and max(idx) < roles.joint_count, name


@pytest.mark.parametrize("n, mask", [(3, [1, 1, 1, 0, 0]), (5, [1] * 5), (7, [1] * 5)])
def test_pad_or_truncate(n, mask):
    v = np.arange(n * 2, dtype=float).reshape(n, 2) + 1
    out, m = pad_or_truncate(v, 5)
    assert out.shape == (5, 2)
    assert_array_equal(m, np.array(mask, dtype=bool))
    k = min(n, 5)
    assert_array_equal(out[:k], v[:k])
    assert not out[k:].any()


def test_pad_zero_target():
    with pytest.raises(ValueError):
        pad_or_truncate(np.ones((2, 3)), 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30))
def test_pad_lengths(n, target):
    out, m = pad_or_truncate(np.ones((n, 3)), target)
    assert out.shape[0] == target and m.shape == (target,)
    assert m.sum() == min(n, target)


def _by_subject(subjects):
    return [SkeletonSequence(f"s{k}", s, 0, np.zeros((1, 2, 3))) for k, s in enumerate(subjects)]


def test_split_by_subject():
    seqs = _by_subject([1, 2, 3, 4, 1, 4])
    split = cross_subject_split(seqs, {4})
    assert split.train == ["s0", "s1", "s2", "s4"]
    assert split.test == ["s3", "s5"]
    assert sorted(split.train + split.test) == sorted(s.id for s in seqs)


@pytest.mark.parametrize("test", [{1, 2, 3, 4}, {9}])
def test_split_empty_side(test):
    with pytest.raises(SplitError):
        cross_subject_split(_by_subject([1, 2, 3, 4]), test)
