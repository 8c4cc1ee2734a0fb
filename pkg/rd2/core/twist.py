from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np
from typing_extensions import TypeAlias

from rd2.core.math_helpers import ArrayLike, as_vector


class ActuationLimits(NamedTuple):
    """Componentwise bounds on commanded twists."""

    v_max: float
    """Largest linear speed per axis (m/s)"""

    w_max: float
    """Largest angular speed per axis (rad/s)"""

    def as_array(self) -> np.ndarray:
        """The per-component limit 6-vector ``(v, v, v, w, w, w)``."""
        return np.array([self.v_max] * 3 + [self.w_max] * 3)


DEFAULT_LIMITS = ActuationLimits(0.02, 0.1)


@dataclass(frozen=True, eq=False)
class Twist:
    """A commanded linear (m/s) and angular (rad/s) velocity at the piece center.

    Twists are the action space of the assembly policy, flattened as
    ``(v_x, v_y, v_z, w_x, w_y, w_z)``.
    """

    linear: np.ndarray
    """The linear velocity 3-vector"""

    angular: np.ndarray
    """The angular velocity 3-vector"""

    def __post_init__(self):
        super().__setattr__("linear", as_vector(self.linear, 3, "twist linear"))
        super().__setattr__("angular", as_vector(self.angular, 3, "twist angular"))

    @classmethod
    def zero(cls) -> Twist:
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_array(cls, values: ArrayLike) -> Twist:
        """Create a twist from its flat 6-component form."""
        flat = np.asarray(values, dtype=np.float64).reshape(-1)
        if flat.size != 6:
            raise ValueError(f"A flat twist needs 6 values, got {flat.size}")
        return cls(flat[:3], flat[3:])

    @classmethod
    def from_def(cls, twist_def: TwistDef) -> Twist:
        if isinstance(twist_def, Twist):
            return twist_def
        return cls.from_array(twist_def)

    def as_array(self) -> np.ndarray:
        return np.concatenate((self.linear, self.angular))

    def to_flat(self) -> list:
        return [float(v) for v in self.as_array()]

    def clamped(self, limits: ActuationLimits) -> Tuple[Twist, bool]:
        """Clamp every component into ``limits``.

        Returns:
            The clamped twist and whether any component had to change.

            >>> t, changed = Twist((0.05, 0, 0), (0, 0, -1)).clamped(DEFAULT_LIMITS)
            >>> t.to_flat(), changed
            ([0.02, 0.0, 0.0, 0.0, 0.0, -0.1], True)
        """
        limit = limits.as_array()
        raw = self.as_array()
        clipped = np.clip(raw, -limit, limit)
        changed = bool(np.any(clipped != raw))
        if not changed:
            return self, False
        return Twist.from_array(clipped), True

    def within(self, limits: ActuationLimits) -> bool:
        return bool(np.all(np.abs(self.as_array()) <= limits.as_array()))

    def __mul__(self, other: float) -> Twist:
        if isinstance(other, Twist):
            raise TypeError
        return Twist(self.linear * other, self.angular * other)

    def __rmul__(self, other: float) -> Twist:
        return self.__mul__(other)

    def __eq__(self, other):
        return (
            isinstance(other, Twist)
            and np.array_equal(self.linear, other.linear)
            and np.array_equal(self.angular, other.angular)
        )

    def __hash__(self):
        return hash((self.linear.tobytes(), self.angular.tobytes()))

    def __repr__(self):
        return f"Twist(linear={self.linear.tolist()}, angular={self.angular.tolist()})"


TwistDef: TypeAlias = Union[Twist, Sequence[float]]
"""A ``Twist`` or a flat 6-float sequence for one"""
