"""Geometric primitives on the unit sphere and the rotation group.

All functions are pure and operate on plain numpy arrays: points on the
sphere are float (3,) arrays with unit norm, attitudes are (3, 3)
special-orthogonal matrices.  `unit_vector` and `reorthonormalize` are the
constructors that establish those invariants; everything downstream assumes
them.
"""

import math

import numpy as np

from .errors import AntipodalInput, DegenerateMatrix

# Below this rotation angle the Rodrigues formula is replaced by its
# second-order series to avoid cancellation in sin(theta)/theta.
_SMALL_ANGLE = 1e-8


def unit_vector(v) -> np.ndarray:
    """Return v normalized to unit length as a float (3,) array.

    Raises ValueError for inputs with near-zero norm; the direction would be
    meaningless.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    n = math.sqrt(float(v @ v))
    if n < 1e-12:
        raise ValueError("cannot normalize a near-zero vector")
    return v / n


def cross(a, b) -> np.ndarray:
    """Cross product of two 3-vectors.

    Equivalent to np.cross but far cheaper for single vectors, which matters
    inside the simulation inner loop.
    """
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def cross_matrix(v) -> np.ndarray:
    """Skew-symmetric matrix S of a 3-vector, with S @ y == v x y for all y."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def geodesic_distance(x, y) -> float:
    """Great-circle angle (rad) between two unit vectors, in [0, pi].

    The dot product is clamped to [-1, 1] so that rounding of nearly
    (anti)parallel inputs cannot push arccos outside its domain.
    """
    d = float(np.dot(x, y))
    if d > 1.0:
        d = 1.0
    elif d < -1.0:
        d = -1.0
    return math.acos(d)


def exp_so3(phi) -> np.ndarray:
    """Matrix exponential of a rotation vector (Rodrigues formula).

    For rotation angles below 1e-8 rad the second-order series
    I + S + S^2/2 is used instead of the closed form.
    """
    phi = np.asarray(phi, dtype=float)
    theta = math.sqrt(float(phi @ phi))
    s = cross_matrix(phi)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + s + 0.5 * (s @ s)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * s + b * (s @ s)


def minimal_rotation(a, b) -> np.ndarray:
    """Rotation about a x b by the angle between a and b, mapping a onto b.

    Both inputs must be unit vectors.  Raises AntipodalInput when a and b are
    opposite within tolerance, since the rotation axis is then undefined.
    """
    c = float(np.dot(a, b))
    if c <= -1.0 + 1e-9:
        raise AntipodalInput("antipodal vectors: minimal rotation axis undefined")
    v = cross(a, b)
    s = cross_matrix(v)
    # Stable form of Rodrigues for axis a x b: I + S + S^2 / (1 + cos).
    return np.eye(3) + s + (s @ s) / (1.0 + c)


def _det3(m) -> float:
    return (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def reorthonormalize(m) -> np.ndarray:
    """Project a near-rotation matrix onto SO(3).

    Uses the polar factor from the SVD, which is the nearest orthogonal
    matrix in the Frobenius norm, and is the identity map on inputs already
    in SO(3).  Raises DegenerateMatrix when det(m) <= 0 (the projection
    would be a reflection or is not unique).
    """
    m = np.asarray(m, dtype=float)
    if _det3(m) <= 0.0:
        raise DegenerateMatrix("matrix does not project onto a proper rotation")
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if _det3(r) < 0.0:  # guard against sign flip from SVD ordering
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def rotation_defect(r) -> float:
    """Frobenius norm of R^T R - I; zero for an exact rotation."""
    return float(np.linalg.norm(r.T @ r - np.eye(3)))
