"""Frame bookkeeping: composition, inversion, distance, and wrench transforms.

All functions here are pure, so values may be shared freely between threads.
"""

import numpy as np

from rd2.core.math_helpers import gram_schmidt, orthonormality_residual, rotation_angle
from rd2.core.pose import ORTHONORMAL_TOLERANCE, Pose
from rd2.core.wrench import Wrench

DEFAULT_LAMBDA_ROT = 0.1
"""Default meters-per-radian weight of the rotational term in ``pose_distance``."""


def pose_compose(a: Pose, b: Pose) -> Pose:
    """Compose two poses, ``a`` applied after ``b``.

    If ``b`` is the pose of frame ``c`` in ``b``'s parent frame ``b0`` and ``a`` is the
    pose of ``b0`` in ``a0``, the result is the pose of ``c`` in ``a0``.

    Long composition chains are re-orthonormalized with Gram-Schmidt once their
    residual exceeds ``ORTHONORMAL_TOLERANCE`` (1e-9). A looser trigger such as
    1e-7 would let products through that ``Pose`` itself rejects, so the
    construction tolerance is the trigger.

        >>> p = pose_compose(Pose.from_translation((0, 0, 0.1)),
        ...                  Pose.from_translation((0, 0, 0.2)))
        >>> [round(v, 12) for v in p.translation]
        [0.0, 0.0, 0.3]
    """
    rotation = a.rotation @ b.rotation
    if orthonormality_residual(rotation) > ORTHONORMAL_TOLERANCE:
        rotation = gram_schmidt(rotation)
    return Pose(rotation, a.rotation @ b.translation + a.translation)


def pose_inverse(a: Pose) -> Pose:
    """Invert a pose, so that ``pose_compose(a, pose_inverse(a))`` is the identity."""
    rotation_t = a.rotation.T
    return Pose(rotation_t, -(rotation_t @ a.translation))


def pose_distance(x: Pose, g: Pose, lambda_rot: float = DEFAULT_LAMBDA_ROT) -> float:
    """The distance between two poses in meters-equivalent.

    This is the Euclidean distance between the translations plus ``lambda_rot``
    times the geodesic angle between the rotations. It is zero iff the poses are
    equal, symmetric, and satisfies the triangle inequality.

        >>> import math
        >>> from rd2.core.pose import IDENTITY
        >>> turned = Pose.from_rotation_vector((0, 0, math.pi / 2))
        >>> round(pose_distance(IDENTITY, turned, 0.1), 5)
        0.15708
    """
    if lambda_rot < 0:
        raise ValueError("lambda_rot must be non-negative")
    translation_distance = float(np.linalg.norm(g.translation - x.translation))
    if lambda_rot == 0:
        return translation_distance
    return translation_distance + lambda_rot * rotation_angle(
        x.rotation.T @ g.rotation
    )


def wrench_transform(pose_ab: Pose, wrench_b: Wrench) -> Wrench:
    """Re-express a wrench given in frame ``b`` in frame ``a``.

    ``pose_ab`` is the pose of frame ``b`` in frame ``a``, with rotation ``R`` and
    translation ``t``. The result is ``f_a = R f_b`` and
    ``tau_a = [t]x R f_b + R tau_b``.

        >>> w = wrench_transform(Pose.from_translation((0, 0, 0.1)),
        ...                      Wrench((1, 0, 0), (0, 0, 0)))
        >>> w.torque.tolist()
        [0.0, 0.1, 0.0]
    """
    rotated_force = pose_ab.rotation @ wrench_b.force
    return Wrench(
        rotated_force,
        np.cross(pose_ab.translation, rotated_force)
        + pose_ab.rotation @ wrench_b.torque,
    )


def geodesic_angle(x: Pose, g: Pose) -> float:
    """The rotation angle in radians taking ``x``'s orientation to ``g``'s."""
    return rotation_angle(x.rotation.T @ g.rotation)
