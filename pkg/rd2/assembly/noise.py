"""Sensor and friction perturbation models.

Wrench noise is zero-mean Gaussian per channel with standard deviation equal to a
fraction of a reference scale. The reference is the running RMS of the clean signal
over the current episode, floored at ``NOISE_FLOOR`` so that noise stays meaningful
while the piece is in free space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rd2.core.wrench import Wrench

NOISE_FLOOR = np.array([1.0, 1.0, 1.0, 0.1, 0.1, 0.1])
"""Smallest reference scale per channel: 1 N force, 0.1 N·m torque"""
NOISE_FLOOR.flags.writeable = False


@dataclass(frozen=True, eq=False)
class RunningRms:
    """Per-channel RMS of the clean wrenches seen so far in an episode."""

    count: int = 0
    sum_squares: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def updated(self, wrench: Wrench) -> RunningRms:
        return RunningRms(self.count + 1, self.sum_squares + wrench.as_array() ** 2)

    @property
    def rms(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros(6)
        return np.sqrt(self.sum_squares / self.count)

    def reference_scale(self) -> np.ndarray:
        return np.maximum(self.rms, NOISE_FLOOR)


def inject_noise(
    wrench: Wrench,
    ft_noise_frac: float,
    rng: np.random.Generator,
    reference_scale: Optional[np.ndarray] = None,
) -> Wrench:
    """Add zero-mean Gaussian noise to every wrench component.

    Args:
        wrench: The clean wrench.
        ft_noise_frac: Noise standard deviation as a fraction of the reference.
        rng: The generator to draw from. Not touched when the fraction is 0.
        reference_scale: Per-channel reference 6-vector. Defaults to
            ``NOISE_FLOOR``.
    """
    if ft_noise_frac < 0:
        raise ValueError("Noise fraction must be non-negative")
    if ft_noise_frac == 0:
        return wrench
    if reference_scale is None:
        reference_scale = NOISE_FLOOR
    sigma = ft_noise_frac * np.asarray(reference_scale, dtype=np.float64)
    return Wrench.from_array(wrench.as_array() + rng.normal(0.0, 1.0, 6) * sigma)


def perturb_friction(
    friction_coeff: float, friction_noise_frac: float, rng: np.random.Generator
) -> float:
    """Scale a friction coefficient by ``1 + N(0, fraction)``, clamped at zero.

    >>> perturb_friction(0.3, 0.0, None)
    0.3
    """
    if friction_noise_frac < 0:
        raise ValueError("Noise fraction must be non-negative")
    if friction_noise_frac == 0:
        return friction_coeff
    return friction_coeff * max(0.0, 1.0 + rng.normal(0.0, friction_noise_frac))
