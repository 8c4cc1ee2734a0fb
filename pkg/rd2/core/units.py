"""Interoperable physical quantity classes and some related helper functions."""
from __future__ import annotations

import math
import re
from typing import Any, Dict, Type, TypeVar, Union, cast

TUnit = TypeVar("TUnit", bound="Unit")


class Unit:
    """An immutable physical quantity with a unit.

    Unit objects enable easy conversion from one unit to another and convenient
    operations between them. Return values from arithmetic are given in the type on
    the left.

        >>> from rd2.core.units import Meter, Mm
        >>> print(Meter(0.001) + Mm(2))
        Meter(0.003)

    Every unit belongs to a dimension (length or angle). Mixing dimensions in
    arithmetic or comparisons raises a ``TypeError``.

        >>> Mm(3).base_value
        0.003

    Equality is checked with a tolerance of ``1e-12`` base units, which is far
    below anything the contact simulation resolves.
    """

    __slots__ = {
        "base_value": "The underlying float value in SI base units.",
        "_display_value": "",
    }

    CONVERSION_RATE: float = 1
    """The ratio of this class to its dimension's SI base unit.

    Subclasses should override this.
    """

    DIMENSION: str = "length"
    """The physical dimension of this unit class."""

    def __init__(self, value: Union[Unit, float], _raw_base_value=None):
        """Create a unit from another unit of the same dimension or a raw number."""
        if _raw_base_value is not None:
            # Short-circuiting constructor for internal use
            self.base_value = _raw_base_value
            self._display_value = None
        elif isinstance(value, Unit):
            self._check_dimension(value)
            self.base_value = value.base_value
            self._display_value = None
        else:
            self.base_value = value * self.CONVERSION_RATE
            self._display_value = value

    @property
    def display_value(self) -> float:
        """A human-friendly unit value.

        If the unit was constructed with a simple number, this will return the exact
        given argument value. Otherwise this is the converted value rounded to 9
        decimal places.
        """
        if self._display_value is not None:
            return self._display_value
        return round(self.base_value / self.CONVERSION_RATE, 9)

    def _check_dimension(self, other: Any):
        if getattr(other, "DIMENSION", None) != self.DIMENSION:
            raise TypeError(
                f"Cannot combine {type(self).__name__} with {type(other).__name__}"
            )

    def __repr__(self):
        return "{}({})".format(type(self).__name__, self.display_value)

    _CMP_EPSILON = 1e-12

    def __lt__(self, other: Unit):
        self._check_dimension(other)
        return self.base_value - other.base_value < -Unit._CMP_EPSILON

    def __le__(self, other: Unit):
        self._check_dimension(other)
        return self.base_value - other.base_value < Unit._CMP_EPSILON

    def __eq__(self, other: Any):
        return getattr(other, "DIMENSION", None) == self.DIMENSION and (
            self.base_value == other.base_value
            or abs(self.base_value - other.base_value) < Unit._CMP_EPSILON
        )

    def __hash__(self):
        return hash((self.DIMENSION, round(self.base_value, 12)))

    def __gt__(self, other: Unit):
        self._check_dimension(other)
        return self.base_value - other.base_value > Unit._CMP_EPSILON

    def __ge__(self, other: Unit):
        self._check_dimension(other)
        return self.base_value - other.base_value > -Unit._CMP_EPSILON

    def __add__(self: TUnit, other: Unit) -> TUnit:
        self._check_dimension(other)
        return type(self)(None, _raw_base_value=self.base_value + other.base_value)

    def __sub__(self: TUnit, other: Unit) -> TUnit:
        self._check_dimension(other)
        return type(self)(None, _raw_base_value=self.base_value - other.base_value)

    def __mul__(self: TUnit, other: float) -> TUnit:
        if isinstance(other, Unit):
            raise TypeError
        return type(self)(None, _raw_base_value=self.base_value * other)

    def __rmul__(self: TUnit, other: float) -> TUnit:
        return self.__mul__(other)

    def __truediv__(self: TUnit, other: Union[Unit, float]) -> Union[TUnit, float]:
        if isinstance(other, Unit):
            # Unit / Unit -> Float
            self._check_dimension(other)
            return self.base_value / other.base_value
        return type(self)(None, _raw_base_value=self.base_value / other)

    def __neg__(self: TUnit) -> TUnit:
        return type(self)(None, _raw_base_value=-self.base_value)

    def __abs__(self: TUnit) -> TUnit:
        return type(self)(None, _raw_base_value=abs(self.base_value))

    def __float__(self):
        return float(self.base_value)


class Meter(Unit):
    """A meter."""

    CONVERSION_RATE = 1


class Mm(Unit):
    """A millimeter."""

    CONVERSION_RATE = 0.001


class Um(Unit):
    """A micrometer."""

    CONVERSION_RATE = 1e-6


class Radian(Unit):
    """A radian."""

    DIMENSION = "angle"
    CONVERSION_RATE = 1


class Degree(Unit):
    """An angular degree."""

    DIMENSION = "angle"
    CONVERSION_RATE = math.pi / 180


ZERO = Meter(0)
"""Shorthand for a zero length"""

_SUFFIXES: Dict[str, Type[Unit]] = {
    "m": Meter,
    "mm": Mm,
    "um": Um,
    "rad": Radian,
    "deg": Degree,
}

_quantity_regex = re.compile(
    r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-z]*)\s*$"
)


def parse_quantity(text: str, default: Type[Unit] = Meter) -> Unit:
    """Parse a quantity string like ``"3mm"`` or ``"5deg"`` into a ``Unit``.

    Bare numbers are interpreted in the ``default`` unit.

        >>> parse_quantity("3mm")
        Mm(3.0)
        >>> parse_quantity("5deg").base_value == Degree(5).base_value
        True
        >>> parse_quantity("0.25", Radian)
        Radian(0.25)
    """
    match = _quantity_regex.match(text)
    if match is None:
        raise ValueError(f"Cannot parse quantity '{text}'")
    number, suffix = match.groups()
    if not suffix:
        return default(float(number))
    unit_class = _SUFFIXES.get(suffix)
    if unit_class is None:
        raise ValueError(f"Unknown unit suffix '{suffix}' in '{text}'")
    return unit_class(float(number))


def to_base_value(
    value: Union[Unit, float, int, str], default: Type[Unit] = Meter
) -> float:
    """Resolve a number, quantity string, or ``Unit`` into an SI float.

    Numbers are taken as already being in SI units.

        >>> to_base_value("2mm")
        0.002
        >>> to_base_value(0.1)
        0.1
    """
    if isinstance(value, Unit):
        return float(value.base_value)
    if isinstance(value, str):
        return float(parse_quantity(value, default).base_value)
    return float(cast(float, value))
