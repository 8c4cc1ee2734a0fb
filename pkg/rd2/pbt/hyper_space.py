"""The hyperparameters population based training searches over."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from rd2.core.exceptions import ConfigError

PERTURB_FACTORS = (0.8, 1.2)
RESAMPLE_PROBABILITY = 0.25

Number = Union[int, float]


@dataclass(frozen=True)
class IntRange:
    """An inclusive integer interval."""

    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"Empty range [{self.low}, {self.high}]")

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.low, self.high + 1))

    def legalize(self, value: Number) -> int:
        """Round half up, then clamp.

        >>> IntRange(3, 8).legalize(8 * 1.2)
        8
        """
        return min(self.high, max(self.low, int(math.floor(value + 0.5))))

    def contains(self, value: Number) -> bool:
        return value == int(value) and self.low <= value <= self.high

    def to_dict(self) -> Dict[str, Any]:
        return {"range": [self.low, self.high]}


@dataclass(frozen=True)
class Choice:
    """A finite set of allowed values."""

    values: Tuple[Number, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("A choice needs at least one value")

    def sample(self, rng: np.random.Generator) -> Number:
        return self.values[int(rng.integers(len(self.values)))]

    def legalize(self, value: Number) -> Number:
        """Snap to the nearest allowed value, the smaller one on ties.

        >>> Choice((16, 32, 64, 128)).legalize(64 * 0.8)
        64
        """
        return min(self.values, key=lambda v: (abs(v - value), v))

    def contains(self, value: Number) -> bool:
        return value in self.values

    def to_dict(self) -> Dict[str, Any]:
        return {"choices": list(self.values)}


Domain = Union[IntRange, Choice]


class Mutation(NamedTuple):
    """One change to a hyperparameter made while exploring."""

    name: str
    before: Number
    after: Number
    kind: str
    """``"resample"``, ``"perturb"`` or ``"constrain"``"""
    factor: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return self._asdict()


def _domain_from_dict(name: str, data: Mapping[str, Any]) -> Domain:
    if "range" in data:
        low, high = data["range"]
        return IntRange(int(low), int(high))
    if "choices" in data:
        return Choice(tuple(data["choices"]))
    raise ConfigError(f"hyper_space.{name}", "Expected 'range' or 'choices'.")


@dataclass(frozen=True)
class HyperSpace:
    """Named hyperparameter domains."""

    domains: Tuple[Tuple[str, Domain], ...]

    @classmethod
    def full(cls) -> HyperSpace:
        """The space of full-scale runs with eight trials of eight actors."""
        return cls(
            (
                ("num_batches", IntRange(20, 120)),
                ("sequence_length", Choice((16, 32, 64, 128))),
                ("target_update_frequency", Choice((25000, 50000, 75000, 100000))),
                ("n_step", IntRange(3, 8)),
                ("min_iteration_time", Choice((30, 40, 50, 60))),
            )
        )

    @classmethod
    def desk(cls) -> HyperSpace:
        """A scaled-down space for laptop-sized runs."""
        return cls(
            (
                ("num_batches", IntRange(4, 20)),
                ("sequence_length", Choice((8, 16, 32))),
                ("target_update_frequency", Choice((100, 250, 500, 1000))),
                ("n_step", IntRange(2, 4)),
                ("min_iteration_time", Choice((0.5, 1, 2, 3))),
            )
        )

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.domains]

    def __getitem__(self, name: str) -> Domain:
        for key, domain in self.domains:
            if key == name:
                return domain
        raise KeyError(name)

    def with_overrides(self, overrides: Mapping[str, Mapping[str, Any]]):
        merged = dict(self.domains)
        for name, data in overrides.items():
            merged[name] = _domain_from_dict(name, data)
        return HyperSpace(tuple(merged.items()))

    def to_dict(self) -> Dict[str, Any]:
        return {name: domain.to_dict() for name, domain in self.domains}

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping[str, Any]]) -> HyperSpace:
        return cls(tuple((k, _domain_from_dict(k, v)) for k, v in data.items()))

    def contains(self, hyperparams: Mapping[str, Number]) -> bool:
        return all(
            self[name].contains(value)
            for name, value in hyperparams.items()
            if name in self.names
        )

    def sample(self, rng: np.random.Generator) -> Dict[str, Number]:
        values = {name: domain.sample(rng) for name, domain in self.domains}
        return self.constrain(values)[0]

    def constrain(
        self, hyperparams: Dict[str, Number]
    ) -> Tuple[Dict[str, Number], List[Mutation]]:
        """Lower ``n_step`` to half the sequence length where it exceeds it."""
        if "n_step" not in hyperparams or "sequence_length" not in hyperparams:
            return hyperparams, []
        limit = int(hyperparams["sequence_length"]) // 2
        before = hyperparams["n_step"]
        if before <= limit:
            return hyperparams, []
        after = limit
        if "n_step" in self.names:
            domain = self["n_step"]
            if isinstance(domain, IntRange):
                after = max(min(limit, domain.high), domain.low)
        constrained = dict(hyperparams, n_step=after)
        return constrained, [Mutation("n_step", before, after, "constrain")]

    def explore(
        self,
        hyperparams: Mapping[str, Number],
        rng: np.random.Generator,
        resample_probability: float = RESAMPLE_PROBABILITY,
        factors: Tuple[float, float] = PERTURB_FACTORS,
    ) -> Tuple[Dict[str, Number], List[Mutation]]:
        """Resample or perturb every hyperparameter independently.

        Each value is redrawn from its domain with ``resample_probability``,
        otherwise multiplied by one of ``factors`` chosen uniformly and brought
        back into its domain.
        """
        explored = dict(hyperparams)
        mutations = []
        for name, domain in self.domains:
            before = explored[name]
            if rng.uniform() < resample_probability:
                after = domain.sample(rng)
                mutations.append(Mutation(name, before, after, "resample"))
            else:
                factor = factors[int(rng.integers(2))]
                after = domain.legalize(before * factor)
                mutations.append(Mutation(name, before, after, "perturb", factor))
            explored[name] = after
        explored, constrained = self.constrain(explored)
        return explored, mutations + constrained
