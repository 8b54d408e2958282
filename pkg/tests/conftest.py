import numpy as np
import pytest

from deeptemporal.skeleton_data import JointRoleMap, SkeletonSequence

ROLES5 = JointRoleMap(hip_center=0, hip_left=1, hip_right=2, spine_base=3, spine=4, joint_count=6)


def canonical_frame():
    """Hips on x, spine on y, hip centre at the origin, unit spine."""
    f = np.zeros((6, 3))
    f[1] = (1.0, 0.0, 0.0)
    f[2] = (-1.0, 0.0, 0.0)
    f[4] = (0.0, 1.0, 0.0)
    f[5] = (0.3, 0.5, 0.2)
    return f


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def random_sequence(rng, T=6, J=6, label=0, subject=1, sid="a"):
    frames = rng.normal(size=(T, J, 3))
    return SkeletonSequence(id=sid, subject=subject, label=label, frames=frames)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def longdouble_loss(params, x, labels, mode, masks, dtype=np.longdouble):
    """Loss evaluated in extended precision so finite differences are not swamped by rounding."""
    from deeptemporal.lstm_core import compute_loss, forward_sequence

    wide = params.map(lambda a: a.astype(dtype))
    tape = forward_sequence(x.astype(dtype), wide)
    return compute_loss(tape, labels, mode, masks)


def finite_difference_errors(params, x, labels, mode="many-to-many", masks=None, step=1e-5, dtype=np.longdouble):
    """Max relative error of analytic vs central-difference gradients, per parameter array.

    The difference quotient is formed from losses computed in ``dtype``.
    """
    from deeptemporal.lstm_core import backward_through_time, forward_sequence

    tape = forward_sequence(x, params)
    grads = backward_through_time(tape, labels, mode, masks, params)
    errors = {}
    base = params.arrays()
    for k, ((name, _), g) in enumerate(zip(params.named_arrays(), grads.arrays())):
        worst = 0.0
        for idx in np.ndindex(base[k].shape):
            plus = [a.copy() for a in base]
            minus = [a.copy() for a in base]
            plus[k][idx] += step
            minus[k][idx] -= step
            lp = longdouble_loss(type(params).from_arrays(params.hidden_sizes, plus), x, labels, mode, masks, dtype)
            lm = longdouble_loss(type(params).from_arrays(params.hidden_sizes, minus), x, labels, mode, masks, dtype)
            numeric = float((lp - lm) / (2 * step))
            analytic = float(g[idx])
            worst = max(worst, abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8))
        errors[name] = worst
    return errors
