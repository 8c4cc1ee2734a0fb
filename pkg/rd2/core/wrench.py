from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from typing_extensions import TypeAlias

from rd2.core.math_helpers import ArrayLike, as_vector


@dataclass(frozen=True, eq=False)
class Wrench:
    """A force (N) and torque (N·m) pair measured at some frame.

    Wrenches are the only thing an assembly policy ever observes. Their flat form is
    ordered ``(f_x, f_y, f_z, tau_x, tau_y, tau_z)``.

    Wrenches support addition and scalar multiplication:

        >>> w = Wrench((1, 0, 0), (0, 0, 2))
        >>> (w + w * 2).to_flat()
        [3.0, 0.0, 0.0, 0.0, 0.0, 6.0]
    """

    force: np.ndarray
    """The force 3-vector"""

    torque: np.ndarray
    """The torque 3-vector"""

    def __post_init__(self):
        super().__setattr__("force", as_vector(self.force, 3, "wrench force"))
        super().__setattr__("torque", as_vector(self.torque, 3, "wrench torque"))

    @classmethod
    def zero(cls) -> Wrench:
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_array(cls, values: ArrayLike) -> Wrench:
        """Create a wrench from its flat 6-component form."""
        flat = np.asarray(values, dtype=np.float64).reshape(-1)
        if flat.size != 6:
            raise ValueError(f"A flat wrench needs 6 values, got {flat.size}")
        return cls(flat[:3], flat[3:])

    @classmethod
    def from_def(cls, wrench_def: WrenchDef) -> Wrench:
        if isinstance(wrench_def, Wrench):
            return wrench_def
        return cls.from_array(wrench_def)

    def as_array(self) -> np.ndarray:
        """The flat ``(f, tau)`` 6-vector."""
        return np.concatenate((self.force, self.torque))

    def to_flat(self) -> list:
        return [float(v) for v in self.as_array()]

    def __add__(self, other: Wrench) -> Wrench:
        if not isinstance(other, Wrench):
            raise TypeError
        return Wrench(self.force + other.force, self.torque + other.torque)

    def __mul__(self, other: float) -> Wrench:
        if isinstance(other, Wrench):
            raise TypeError
        return Wrench(self.force * other, self.torque * other)

    def __rmul__(self, other: float) -> Wrench:
        return self.__mul__(other)

    def __neg__(self) -> Wrench:
        return Wrench(-self.force, -self.torque)

    def __eq__(self, other):
        return (
            isinstance(other, Wrench)
            and np.array_equal(self.force, other.force)
            and np.array_equal(self.torque, other.torque)
        )

    def __hash__(self):
        return hash((self.force.tobytes(), self.torque.tobytes()))

    def __repr__(self):
        return f"Wrench(force={self.force.tolist()}, torque={self.torque.tolist()})"


ZERO_WRENCH = Wrench.zero()
"""Shorthand for a wrench with all components zero"""

WrenchDef: TypeAlias = Union[Wrench, Sequence[float]]
"""A ``Wrench`` or a flat 6-float sequence for one"""
