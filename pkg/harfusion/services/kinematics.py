"""
Quaternion algebra in (x, y, z, w) order with the Hamilton product.

Every function accepts single quaternions/vectors or arrays of them (last axis
4 or 3) and returns numpy arrays of the broadcast shape.
"""

import numpy as np
from numpy.typing import ArrayLike

from harfusion.core.exceptions import DegenerateQuaternionError, InvalidParameterError
from harfusion.schemas.kinematics import Z_AXIS


UNIT_TOLERANCE = 1e-6
RENORMALIZE_TOLERANCE = 1e-3
ANTIPODAL_TOLERANCE = 1e-9

_CONJUGATE = np.array([-1.0, -1.0, -1.0, 1.0])


def qmul(q1: ArrayLike, q2: ArrayLike) -> np.ndarray:
    x1, y1, z1, w1 = np.moveaxis(np.asarray(q1, dtype=np.float64), -1, 0)
    x2, y2, z2, w2 = np.moveaxis(np.asarray(q2, dtype=np.float64), -1, 0)
    return np.stack(
        [
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 + y1 * w2 + z1 * x2 - x1 * z2,
            w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2,
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        ],
        axis=-1,
    )


def qconj(q: ArrayLike) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) * _CONJUGATE


def normalize_quat(q: ArrayLike, what: str = "quaternion") -> np.ndarray:
    """
    Renormalize quaternions that drifted at most 1e-3 from unit norm.

    :raises DegenerateQuaternionError:
        If any norm is zero, non-finite or further than the tolerance from 1.
    """
    q = np.asarray(q, dtype=np.float64)
    norms = np.linalg.norm(q, axis=-1, keepdims=True)
    bad = ~np.isfinite(norms) | (np.abs(norms - 1.0) > RENORMALIZE_TOLERANCE)
    if np.any(bad):
        raise DegenerateQuaternionError(float(norms[bad].flat[0]), what)
    return q / norms


def rotate_vec(q: ArrayLike, v: ArrayLike) -> np.ndarray:
    """
    Rotate v by q: the vector part of (q ⊗ [v, 0]) ⊗ q*.
    """
    qn = normalize_quat(q)
    v = np.asarray(v, dtype=np.float64)
    pure = np.concatenate([v, np.zeros(v.shape[:-1] + (1,))], axis=-1)
    return qmul(qmul(qn, pure), qconj(qn))[..., :3]


def axis_angle_quat(axis: ArrayLike, theta: ArrayLike) -> np.ndarray:
    """
    Rotation by theta about axis; an array of angles gives one quaternion per angle.
    """
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if not norm > 0:
        raise InvalidParameterError("axis", "rotation axis has zero norm")
    half = np.asarray(theta, dtype=np.float64)[..., None] / 2.0
    return np.concatenate([axis / norm * np.sin(half), np.cos(half)], axis=-1)


def _require_unit(v: np.ndarray, name: str) -> None:
    if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1.0) > UNIT_TOLERANCE):
        raise InvalidParameterError(name, "expected a unit vector")


def mirror_vec(v: ArrayLike, n: ArrayLike) -> np.ndarray:
    """
    Reflect v across the plane with unit normal n.
    """
    v = np.asarray(v, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    _require_unit(n, "n")
    return v - 2.0 * np.sum(v * n, axis=-1, keepdims=True) * n


def transition_quat(v_from: ArrayLike, v_to: ArrayLike) -> np.ndarray:
    """
    Unit quaternion rotating direction v_from onto v_to.

    Built as [v_from × v_to, 1 + v_from · v_to] and normalized. Antipodal pairs,
    where that form vanishes, get a 180° rotation about ŷ × v_from (or ẑ × v_from
    when v_from is parallel to ŷ).
    """
    v_from = np.asarray(v_from, dtype=np.float64)
    v_to = np.asarray(v_to, dtype=np.float64)
    _require_unit(v_from, "v_from")
    _require_unit(v_to, "v_to")
    v_from, v_to = np.broadcast_arrays(v_from, v_to)

    dot = np.sum(v_from * v_to, axis=-1, keepdims=True)
    q = np.concatenate([np.cross(v_from, v_to), 1.0 + dot], axis=-1)

    antipodal = dot[..., 0] <= -1.0 + ANTIPODAL_TOLERANCE
    if np.any(antipodal):
        flipped = v_from[antipodal]
        axis = np.cross(np.array([0.0, 1.0, 0.0]), flipped)
        parallel = np.linalg.norm(axis, axis=-1) < 1e-6
        axis[parallel] = np.cross(np.array(Z_AXIS), flipped[parallel])
        axis /= np.linalg.norm(axis, axis=-1, keepdims=True)
        q[antipodal] = np.concatenate([axis, np.zeros(axis.shape[:-1] + (1,))], axis=-1)

    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def direction_vectors(q: ArrayLike) -> np.ndarray:
    """
    Reference vector ẑ rotated by each orientation.
    """
    q = np.asarray(q, dtype=np.float64)
    return rotate_vec(q, np.broadcast_to(Z_AXIS, q.shape[:-1] + (3,)))
