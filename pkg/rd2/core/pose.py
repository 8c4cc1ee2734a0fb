from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from backports.cached_property import cached_property
from typing_extensions import TypeAlias

from rd2.core.exceptions import InvalidPoseError
from rd2.core.math_helpers import (
    ArrayLike,
    as_vector,
    exp_rotation,
    orthonormality_residual,
    skew,
)

ORTHONORMAL_TOLERANCE = 1e-9
"""Largest allowed elementwise deviation of ``R^T R`` from the identity."""


@dataclass(frozen=True, eq=False)
class Pose:
    """A rigid SE(3) transform: a rotation matrix and a translation in meters.

    A ``Pose`` of frame ``b`` expressed in frame ``a`` maps ``b`` coordinates to
    ``a`` coordinates: ``p_a = rotation @ p_b + translation``.

    Poses are immutable; their arrays are read-only copies of the given values.
    The rotation must be orthonormal with determinant +1 to within
    ``ORTHONORMAL_TOLERANCE``.
    """

    rotation: np.ndarray
    """The 3x3 rotation matrix"""

    translation: np.ndarray
    """The translation 3-vector in meters"""

    def __post_init__(self):
        rotation = as_vector(self.rotation, 9, "pose rotation").reshape(3, 3)
        residual = orthonormality_residual(rotation)
        if residual > ORTHONORMAL_TOLERANCE or np.linalg.det(rotation) < 0:
            raise InvalidPoseError(residual)
        # This hack is needed to assign normalized fields on frozen dataclasses
        super().__setattr__("rotation", rotation)
        super().__setattr__(
            "translation", as_vector(self.translation, 3, "pose translation")
        )

    @classmethod
    def identity(cls) -> Pose:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, translation: ArrayLike) -> Pose:
        """Create a pure translation."""
        return cls(np.eye(3), translation)

    @classmethod
    def from_rotation_vector(
        cls, rotation_vector: ArrayLike, translation: ArrayLike = (0.0, 0.0, 0.0)
    ) -> Pose:
        """Create a pose from an axis-angle rotation vector (radians)."""
        return cls(exp_rotation(rotation_vector), translation)

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> Pose:
        """Create a pose from 12 floats: row-major rotation, then translation."""
        flat = np.asarray(values, dtype=np.float64).reshape(-1)
        if flat.size != 12:
            raise ValueError(f"A flat pose needs 12 values, got {flat.size}")
        return cls(flat[:9].reshape(3, 3), flat[9:])

    @classmethod
    def from_def(cls, pose_def: PoseDef) -> Pose:
        if isinstance(pose_def, Pose):
            return pose_def
        return cls.from_flat(pose_def)

    def to_flat(self) -> list:
        """The pose as 12 floats: row-major rotation, then translation."""
        return [float(v) for v in self.rotation.reshape(-1)] + [
            float(v) for v in self.translation
        ]

    @cached_property
    def force_torque_twist_matrix(self) -> np.ndarray:
        """The 6x6 matrix mapping wrench coordinates from this frame to its parent.

        For a pose ``(R, t)`` this is ``[[R, 0], [[t]x R, R]]``.
        """
        matrix = np.zeros((6, 6))
        matrix[:3, :3] = self.rotation
        matrix[3:, :3] = skew(self.translation) @ self.rotation
        matrix[3:, 3:] = self.rotation
        matrix.flags.writeable = False
        return matrix

    def __eq__(self, other):
        """Two poses are equal if their arrays are exactly equal."""
        return (
            isinstance(other, Pose)
            and np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.translation, other.translation)
        )

    def __hash__(self):
        return hash((self.rotation.tobytes(), self.translation.tobytes()))

    def __repr__(self):
        return "Pose(rotation={}, translation={})".format(
            self.rotation.tolist(), self.translation.tolist()
        )


IDENTITY = Pose.identity()
"""Shorthand for the identity pose"""

PoseDef: TypeAlias = Union[Pose, Sequence[float]]
"""A ``Pose`` or a flat 12-float list for one"""
