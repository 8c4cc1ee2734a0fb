"""General math helper tools."""

import math
from typing import Sequence, Union

import numpy as np
from scipy.spatial.transform import Rotation

from rd2.core.exceptions import NonFiniteValueError

ArrayLike = Union[np.ndarray, Sequence[float]]


def as_vector(value: ArrayLike, size: int, what: str) -> np.ndarray:
    """Copy ``value`` into a read-only float64 vector of length ``size``.

    Raises:
        ValueError: If the value has the wrong shape.
        NonFiniteValueError: If any component is NaN or infinite.
    """
    vector = np.array(value, dtype=np.float64).reshape(-1)
    if vector.shape != (size,):
        raise ValueError(f"{what} must have {size} components, got {vector.size}")
    if not np.all(np.isfinite(vector)):
        raise NonFiniteValueError(what)
    vector.flags.writeable = False
    return vector


def skew(v: ArrayLike) -> np.ndarray:
    """The skew-symmetric cross-product matrix ``[v]x`` of a 3-vector.

    >>> skew([1.0, 2.0, 3.0]) @ np.array([4.0, 5.0, 6.0])
    array([-3.,  6., -3.])
    """
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def orthonormality_residual(rotation: np.ndarray) -> float:
    """The largest elementwise deviation of ``R^T R`` from the identity."""
    return float(np.max(np.abs(rotation.T @ rotation - np.eye(3))))


def gram_schmidt(rotation: np.ndarray) -> np.ndarray:
    """Re-orthonormalize a nearly orthonormal rotation matrix.

    The first column keeps its direction, the second is made orthogonal to it and
    the third is rebuilt as their cross product, so the result is always right
    handed.
    """
    x = rotation[:, 0] / np.linalg.norm(rotation[:, 0])
    y = rotation[:, 1] - np.dot(x, rotation[:, 1]) * x
    y = y / np.linalg.norm(y)
    z = np.cross(x, y)
    return np.column_stack((x, y, z))


def rotation_angle(rotation: np.ndarray) -> float:
    """The geodesic angle in radians of a rotation matrix, in ``[0, pi]``.

    Computed with ``atan2`` of the skew and symmetric parts, which keeps full
    precision near zero where ``arccos`` of the trace does not.

    >>> round(rotation_angle(exp_rotation([0.0, 0.0, math.pi / 2])), 12)
    1.570796326795
    """
    antisymmetric = rotation - rotation.T
    sin_theta = 0.5 * math.sqrt(
        antisymmetric[2, 1] ** 2 + antisymmetric[0, 2] ** 2 + antisymmetric[1, 0] ** 2
    )
    cos_theta = 0.5 * (float(np.trace(rotation)) - 1.0)
    return math.atan2(sin_theta, cos_theta)


def exp_rotation(rotation_vector: ArrayLike) -> np.ndarray:
    """The matrix exponential ``exp([w]x)`` of a rotation vector."""
    rotation_vector = np.array(rotation_vector, dtype=np.float64)
    return Rotation.from_rotvec(rotation_vector).as_matrix()


def log_rotation(rotation: np.ndarray) -> np.ndarray:
    """The rotation vector of a rotation matrix (inverse of ``exp_rotation``)."""
    return Rotation.from_matrix(rotation).as_rotvec()


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """A uniformly distributed random rotation matrix drawn from ``rng``."""
    seed = int(rng.integers(0, 2**32 - 1))
    return Rotation.random(random_state=seed).as_matrix()
