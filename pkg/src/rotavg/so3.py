"""Core SO(3) math: exponential/logarithm maps, distances, projection, matrix utilities."""

from __future__ import annotations

import math

import numpy as np

# Below this angle the Rodrigues coefficients switch to 2-term Taylor series.
SMALL_ANGLE = 1e-4
# Within this distance of pi the log map recovers the axis from the symmetric part.
NEAR_PI = 1e-6
# Frobenius tolerance for inputs claiming to be rotation matrices.
ORTHONORMALITY_TOL = 1e-9

_EPS_AXIS = 1e-12


def _as_matrix3(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must have shape (3, 3), got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _as_vector3(v, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must have shape (3,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def check_rotation(r, name: str = "rotation") -> np.ndarray:
    """Validate a rotation matrix (orthonormal, det +1) and return it as an array."""
    r = _as_matrix3(r, name)
    if np.linalg.norm(r.T @ r - np.eye(3)) > ORTHONORMALITY_TOL:
        raise ValueError(f"{name} is not orthonormal within {ORTHONORMALITY_TOL}")
    if abs(np.linalg.det(r) - 1.0) > ORTHONORMALITY_TOL:
        raise ValueError(f"{name} does not have determinant +1 within {ORTHONORMALITY_TOL}")
    return r


def hat(v) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, so that hat(v) @ w == cross(v, w)."""
    v = _as_vector3(v)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(m) -> np.ndarray:
    """Inverse of hat. Requires a skew-symmetric matrix (within 1e-9)."""
    m = _as_matrix3(m)
    if np.abs(m + m.T).max() > 1e-9:
        raise ValueError("vee requires a skew-symmetric matrix")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def vec(m) -> np.ndarray:
    """Column-major vectorization of a 3x3 matrix into a 9-vector."""
    return _as_matrix3(m).flatten(order="F")


def vec_inv(s) -> np.ndarray:
    """Inverse of vec: reshape a 9-vector back into a 3x3 matrix (column-major)."""
    s = np.asarray(s, dtype=float)
    if s.shape != (9,):
        raise ValueError(f"expected shape (9,), got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("vec_inv input has non-finite entries")
    return s.reshape(3, 3, order="F")


def exp_map(v) -> np.ndarray:
    """Map a rotation vector (axis * angle, radians) to a rotation matrix.

    Uses the Rodrigues formula; for angles below SMALL_ANGLE the sin/cos
    coefficients are replaced by 2-term Taylor series so the map is smooth
    through zero.
    """
    v = _as_vector3(v, "rotation vector")
    theta = float(np.linalg.norm(v))
    k = hat(v)
    if theta < SMALL_ANGLE:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


def _antisym_vee(r: np.ndarray) -> np.ndarray:
    # vee(R - R^T) = 2 sin(theta) * axis for a rotation of angle theta.
    return np.array(
        [r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]
    )


def _canonical_sign(axis: np.ndarray) -> np.ndarray:
    # Tie-break for the angle-pi ambiguity: first nonzero component positive.
    for c in axis:
        if abs(c) > _EPS_AXIS:
            return -axis if c < 0.0 else axis
    return axis


def _log_near_pi(r: np.ndarray, rv: np.ndarray) -> np.ndarray:
    """Log map branch for angles within NEAR_PI of pi.

    The antisymmetric part degenerates there (it scales with sin(theta)), so
    the axis is recovered from the symmetric part instead, and the angle from
    the accurately measured ||R - R^T||.
    """
    sin_gap = min(float(np.linalg.norm(rv)) / 2.0, 1.0)
    theta = math.pi - math.asin(sin_gap)
    cos_theta = math.cos(theta)
    # (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) * outer(axis, axis)
    outer = (0.5 * (r + r.T) - cos_theta * np.eye(3)) / (1.0 - cos_theta)
    j = int(np.argmax(np.diag(outer)))
    axis = outer[:, j]
    axis = axis / np.linalg.norm(axis)
    # While theta < pi the antisymmetric part still carries the sign.
    d = float(axis @ rv)
    if d < -_EPS_AXIS:
        axis = -axis
    elif abs(d) <= _EPS_AXIS:
        axis = _canonical_sign(axis)
    return theta * axis


def log_map(r) -> np.ndarray:
    """Map a rotation matrix to its canonical rotation vector (angle in [0, pi]).

    Args:
        r: rotation matrix satisfying the orthonormality tolerance.

    Returns:
        Rotation vector v with ||v|| in [0, pi].
    """
    r = check_rotation(r)
    tr = min(3.0, max(-1.0, float(r[0, 0] + r[1, 1] + r[2, 2])))
    theta = math.acos((tr - 1.0) / 2.0)
    rv = _antisym_vee(r)
    if theta < SMALL_ANGLE:
        # theta/(2 sin theta) -> 1/2 + theta^2/12
        return (0.5 + theta * theta / 12.0) * rv
    if math.pi - theta < NEAR_PI:
        return _log_near_pi(r, rv)
    # ||rv|| = 2 sin(theta); using the measured norm keeps the magnitude stable.
    return (theta / float(np.linalg.norm(rv))) * rv


def geodesic_distance(r1, r2) -> float:
    """Angle of the relative rotation r1 @ r2.T, in [0, pi] radians."""
    r1 = check_rotation(r1, "r1")
    r2 = check_rotation(r2, "r2")
    tr = float(np.einsum("ij,ij->", r1, r2))
    tr = min(3.0, max(-1.0, tr))
    if tr > 2.0:
        # acos is ill-conditioned near zero angle; the sine form keeps
        # coincident inputs at exactly zero.
        s = float(np.linalg.norm(r1 - r2)) / (2.0 * math.sqrt(2.0))
        return 2.0 * math.asin(min(s, 1.0))
    return math.acos((tr - 1.0) / 2.0)


def chordal_distance(r1, r2) -> float:
    """Frobenius norm of r1 - r2 (equals 2*sqrt(2)*sin(geodesic/2) on SO(3))."""
    r1 = _as_matrix3(r1, "r1")
    r2 = _as_matrix3(r2, "r2")
    return float(np.linalg.norm(r1 - r2))


def project_to_so3(m) -> np.ndarray:
    """Closest rotation matrix to m in the Frobenius norm (via SVD)."""
    r, _ = project_to_so3_info(m)
    return r


def project_to_so3_info(m) -> tuple[np.ndarray, bool]:
    """Like project_to_so3, also reporting whether the projection is degenerate.

    The projection is flagged degenerate when a reflection is involved and the
    two smallest singular values coincide: the minimizer is then not unique,
    and an arbitrary one is returned.
    """
    m = _as_matrix3(m)
    u, s, vt = np.linalg.svd(m)
    reflected = np.linalg.det(u @ vt) < 0.0
    if reflected:
        u = u.copy()
        u[:, 2] = -u[:, 2]
    degenerate = bool(reflected and (s[1] - s[2]) <= 1e-9 * max(1.0, s[0]))
    return u @ vt, degenerate


# ---------------------------------------------------------------------------
# Batched kernels. Inputs are assumed valid (n, 3, 3) / (n, 3) stacks; the
# per-element functions above do the validating.
# ---------------------------------------------------------------------------


def exp_map_batch(vs: np.ndarray) -> np.ndarray:
    """Rodrigues formula applied to a stack of rotation vectors, shape (n, 3)."""
    vs = np.asarray(vs, dtype=float).reshape(-1, 3)
    theta = np.linalg.norm(vs, axis=1)
    small = theta < SMALL_ANGLE
    t2 = theta * theta
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0, np.sin(theta) / theta)
        b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(theta)) / t2)
    n = len(vs)
    k = np.zeros((n, 3, 3))
    k[:, 0, 1] = -vs[:, 2]
    k[:, 0, 2] = vs[:, 1]
    k[:, 1, 0] = vs[:, 2]
    k[:, 1, 2] = -vs[:, 0]
    k[:, 2, 0] = -vs[:, 1]
    k[:, 2, 1] = vs[:, 0]
    return np.eye(3) + a[:, None, None] * k + b[:, None, None] * (k @ k)


def log_map_batch(rs: np.ndarray) -> np.ndarray:
    """Log map applied to a stack of rotation matrices, shape (n, 3, 3)."""
    rs = np.asarray(rs, dtype=float).reshape(-1, 3, 3)
    tr = np.clip(rs[:, 0, 0] + rs[:, 1, 1] + rs[:, 2, 2], -1.0, 3.0)
    theta = np.arccos((tr - 1.0) / 2.0)
    rv = np.stack(
        [
            rs[:, 2, 1] - rs[:, 1, 2],
            rs[:, 0, 2] - rs[:, 2, 0],
            rs[:, 1, 0] - rs[:, 0, 1],
        ],
        axis=1,
    )
    small = theta < SMALL_ANGLE
    near_pi = (math.pi - theta) < NEAR_PI
    norms = np.linalg.norm(rv, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(small, 0.5 + theta * theta / 12.0, theta / norms)
    out = factor[:, None] * rv
    for i in np.flatnonzero(near_pi):
        out[i] = _log_near_pi(rs[i], rv[i])
    return out
