from __future__ import annotations

from dataclasses import dataclass

from rd2.core.exceptions import ConfigError
from rd2.core.pose import Pose
from rd2.core.twist import DEFAULT_LIMITS, ActuationLimits

DEFAULT_SENSOR_POSE = Pose.from_translation((0.0, 0.0, 0.08))
"""The simulated F/T sensor sits on the piece axis, 80 mm above its center."""


@dataclass(frozen=True)
class PhysicsParams:
    """Constants of the quasi-static penalty contact simulation."""

    contact_stiffness: float = 2000.0
    """Normal stiffness per contact sample point (N/m)"""

    contact_damping: float = 20.0
    """Normal damping per contact sample point (N·s/m)"""

    friction_coeff: float = 0.3

    friction_smoothing: float = 0.001
    """Sliding speed (m/s) over which friction ramps up to its Coulomb value"""

    dt: float = 0.05

    ft_noise_frac: float = 0.0

    friction_noise_frac: float = 0.0

    sensor_pose: Pose = DEFAULT_SENSOR_POSE
    """Pose of the F/T sensor frame in the piece frame"""

    limits: ActuationLimits = DEFAULT_LIMITS

    max_penetration: float = 0.002
    """Commanded motion is scaled back to stay within this penetration (m)"""

    penetration_tolerance: float = 1e-5
    """Resolution (m) of the motion scaling search"""

    deep_penetration_limit: float = 0.005
    """Start poses penetrating deeper than this (m) are rejected"""

    def __post_init__(self):
        positive = ("contact_stiffness", "friction_smoothing", "dt")
        non_negative = (
            "contact_damping",
            "friction_coeff",
            "ft_noise_frac",
            "friction_noise_frac",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"physics.{name}", "Must be positive.")
        for name in non_negative:
            if not getattr(self, name) >= 0:
                raise ConfigError(f"physics.{name}", "Must be non-negative.")
        if self.limits.v_max <= 0 or self.limits.w_max <= 0:
            raise ConfigError("physics.limits", "Actuation limits must be positive.")
