from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from rd2.core.math_helpers import ArrayLike, as_vector
from rd2.core.pose import Pose
from rd2.core.units import Degree, Mm


@dataclass(frozen=True, eq=False)
class OffsetDistribution:
    """A distribution over initial pose offsets of the moving piece.

    An offset is a fixed linear (m) and angular (rotation vector, rad) part plus
    independent zero-mean Gaussian jitter on each component. Offsets rotate the piece
    about its own center and then translate it.
    """

    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))
    """The fixed linear offset in meters"""

    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))
    """The fixed angular offset as a rotation vector in radians"""

    linear_jitter: float = 0.0
    """Standard deviation of the per-axis linear jitter in meters"""

    angular_jitter: float = 0.0
    """Standard deviation of the per-axis angular jitter in radians"""

    def __post_init__(self):
        super().__setattr__("linear", as_vector(self.linear, 3, "offset linear"))
        super().__setattr__("angular", as_vector(self.angular, 3, "offset angular"))
        if self.linear_jitter < 0 or self.angular_jitter < 0:
            raise ValueError("Offset jitter must be non-negative")

    @classmethod
    def fixed(
        cls, linear: ArrayLike = (0, 0, 0), angular: ArrayLike = (0, 0, 0)
    ) -> OffsetDistribution:
        return cls(np.asarray(linear, float), np.asarray(angular, float))

    @property
    def is_deterministic(self) -> bool:
        return self.linear_jitter == 0 and self.angular_jitter == 0

    def sample(self, rng: Optional[np.random.Generator]) -> Pose:
        """Draw one offset pose.

        Deterministic distributions never touch ``rng``.
        """
        linear = self.linear
        angular = self.angular
        if self.linear_jitter > 0:
            linear = linear + rng.normal(0.0, self.linear_jitter, 3)
        if self.angular_jitter > 0:
            angular = angular + rng.normal(0.0, self.angular_jitter, 3)
        return Pose.from_rotation_vector(angular, linear)

    def to_dict(self) -> Dict[str, object]:
        return {
            "linear": [float(v) for v in self.linear],
            "angular": [float(v) for v in self.angular],
            "linear_jitter": float(self.linear_jitter),
            "angular_jitter": float(self.angular_jitter),
        }

    def __eq__(self, other):
        return (
            isinstance(other, OffsetDistribution)
            and np.array_equal(self.linear, other.linear)
            and np.array_equal(self.angular, other.angular)
            and self.linear_jitter == other.linear_jitter
            and self.angular_jitter == other.angular_jitter
        )

    def __hash__(self):
        return hash(
            (
                self.linear.tobytes(),
                self.angular.tobytes(),
                self.linear_jitter,
                self.angular_jitter,
            )
        )

    def __repr__(self):
        return (
            f"OffsetDistribution(linear={self.linear.tolist()}, "
            f"angular={self.angular.tolist()}, "
            f"linear_jitter={self.linear_jitter}, "
            f"angular_jitter={self.angular_jitter})"
        )


def _level(linear_mm: float, angular_deg: float) -> OffsetDistribution:
    linear = Mm(linear_mm).base_value
    angular = Degree(angular_deg).base_value
    return OffsetDistribution.fixed((linear, linear, linear), (angular, angular, 0.0))


DIFFICULTY_LEVELS = (
    _level(0, 0),
    _level(1, 0),
    _level(2, 0),
    _level(3, 0),
    _level(3, 5),
)
"""Preset offsets of increasing difficulty, indexed by level.

Level 0 starts on the nominal approach axis; levels 1 to 3 shift every axis by 1, 2
and 3 mm; level 4 adds a 5 degree tilt about x and y on top of the 3 mm shift.
"""


def difficulty_level(level: int) -> OffsetDistribution:
    """Look up a preset offset level.

    >>> difficulty_level(2).linear.tolist()
    [0.002, 0.002, 0.002]
    """
    if not 0 <= level < len(DIFFICULTY_LEVELS):
        raise ValueError(
            f"Difficulty level must be in 0..{len(DIFFICULTY_LEVELS) - 1}, got {level}"
        )
    return DIFFICULTY_LEVELS[level]
