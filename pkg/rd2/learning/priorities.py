from __future__ import annotations

from typing import Optional

import numpy as np

from rd2.core.exceptions import NegativePriorityError, NonFiniteValueError

PRIORITY_FLOOR = 1e-6
"""The smallest priority any live sequence or transition may have"""

DEFAULT_ETA = 0.9


def compute_sequence_priority(
    abs_td, eta: float = DEFAULT_ETA, valid: Optional[np.ndarray] = None
) -> float:
    """Mix the max and mean absolute TD error of a sequence's valid transitions.

    >>> round(compute_sequence_priority([1.0, 3.0]), 6)
    2.9

    Raises:
        ValueError: If no transition is valid.
        NegativePriorityError: If any TD magnitude is negative.
    """
    abs_td = np.asarray(abs_td, dtype=np.float64)
    if valid is not None:
        abs_td = abs_td[np.asarray(valid, dtype=bool)]
    if abs_td.size == 0:
        raise ValueError("A sequence priority needs at least one valid transition")
    if not np.all(np.isfinite(abs_td)):
        raise NonFiniteValueError("TD errors")
    if np.any(abs_td < 0):
        raise NegativePriorityError(f"Negative TD magnitude {abs_td.min()}")
    priority = eta * float(np.max(abs_td)) + (1 - eta) * float(np.mean(abs_td))
    return max(priority, PRIORITY_FLOOR)


def transition_priorities(abs_td, valid) -> np.ndarray:
    """Floored per-transition priorities, zero at padding."""
    abs_td = np.asarray(abs_td, dtype=np.float64)
    if np.any(abs_td < 0):
        raise NegativePriorityError(f"Negative TD magnitude {abs_td.min()}")
    return np.where(valid, np.maximum(abs_td, PRIORITY_FLOOR), 0.0)


def importance_weights(probabilities, population: int, beta: float) -> np.ndarray:
    """The unnormalized weights ``(N * P) ** -beta``.

    >>> importance_weights([0.25, 0.5], 4, 1.0).tolist()
    [1.0, 0.5]
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    return (population * probabilities) ** -beta
