from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping, Optional

from rd2.core.exceptions import ConfigError
from rd2.pbt.hyper_space import RESAMPLE_PROBABILITY


@dataclass(frozen=True)
class PopulationConfig:
    num_trials: int = 4
    rounds: int = 20
    """Evaluation rounds; each round trains ``iterations_per_eval`` iterations"""
    iterations_per_eval: int = 5
    evals_per_exploit: int = 1
    """Evaluation rounds between exploit/explore steps"""
    quantile: float = 0.25
    resample_probability: float = RESAMPLE_PROBABILITY
    exploit: bool = True
    max_restarts: int = 2
    max_env_steps: Optional[int] = None
    """Per-trial environment step budget"""
    eval_episodes: int = 10

    def __post_init__(self):
        for name in (
            "num_trials",
            "rounds",
            "iterations_per_eval",
            "evals_per_exploit",
            "eval_episodes",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"population.{name}", "Must be positive.")
        if not 0 < self.quantile <= 0.5:
            raise ConfigError("population.quantile", "Must lie in (0, 0.5].")
        if not 0 <= self.resample_probability <= 1:
            raise ConfigError("population.resample_probability", "Must lie in [0, 1].")
        if self.max_restarts < 0:
            raise ConfigError("population.max_restarts", "Must be non-negative.")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PopulationConfig:
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"population.{sorted(unknown)[0]}", "Unknown field.")
        return cls(**data)
