"""Gradient-based parameter updates.

Optimizers own their moment estimates and turn a snapshot plus gradients into the
next snapshot. They are confined to the learner and are not thread safe.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from rd2.learning.network_params import NetworkParams
from rd2.learning.networks import gradient_norm

DEFAULT_CLIP_NORM = 10.0

OPTIMIZERS = ("adam", "sgd")


def clip_gradients(
    grads: Dict[str, np.ndarray], max_norm: Optional[float]
) -> Tuple[Dict[str, np.ndarray], float]:
    """Scale gradients down so their global L2 norm is at most ``max_norm``.

    Returns:
        The (possibly) scaled gradients and the norm before clipping.

        >>> clipped, norm = clip_gradients({"w": np.array([3.0, 4.0])}, 1.0)
        >>> norm, clipped["w"].tolist()
        (5.0, [0.6000000000000001, 0.8])
    """
    norm = gradient_norm(grads)
    if max_norm is None or norm <= max_norm or norm == 0:
        return grads, norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


class Optimizer:
    """Base class for optimizers. Subclasses implement ``_step``."""

    def __init__(self, learning_rate: float, clip_norm: Optional[float] = None):
        if learning_rate <= 0:
            raise ValueError("Learning rate must be positive")
        self.learning_rate = learning_rate
        self.clip_norm = clip_norm
        self.last_gradient_norm = 0.0

    def apply(
        self, params: NetworkParams, grads: Dict[str, np.ndarray]
    ) -> NetworkParams:
        """Descend along ``grads``, returning the next version of ``params``."""
        grads, self.last_gradient_norm = clip_gradients(grads, self.clip_norm)
        return params.with_arrays(
            {
                name: params[name] - self._step(name, grads[name])
                for name in params.arrays
            }
        )

    def _step(self, name: str, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Sgd(Optimizer):
    """Plain gradient descent."""

    def _step(self, name: str, grad: np.ndarray) -> np.ndarray:
        return self.learning_rate * grad


class Adam(Optimizer):
    """Adaptive moment estimation with bias correction."""

    def __init__(
        self,
        learning_rate: float,
        clip_norm: Optional[float] = DEFAULT_CLIP_NORM,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        super().__init__(learning_rate, clip_norm)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self._first: Dict[str, np.ndarray] = {}
        self._second: Dict[str, np.ndarray] = {}
        self._steps: Dict[str, int] = {}

    def _step(self, name: str, grad: np.ndarray) -> np.ndarray:
        first = self._first.get(name, np.zeros_like(grad))
        second = self._second.get(name, np.zeros_like(grad))
        step = self._steps.get(name, 0) + 1
        first = self.beta1 * first + (1 - self.beta1) * grad
        second = self.beta2 * second + (1 - self.beta2) * grad**2
        self._first[name], self._second[name], self._steps[name] = first, second, step
        first_hat = first / (1 - self.beta1**step)
        second_hat = second / (1 - self.beta2**step)
        return self.learning_rate * first_hat / (np.sqrt(second_hat) + self.epsilon)


def make_optimizer(
    kind: str, learning_rate: float, clip_norm: Optional[float] = DEFAULT_CLIP_NORM
) -> Optimizer:
    """Build an optimizer by name, ``"adam"`` or ``"sgd"``."""
    if kind == "adam":
        return Adam(learning_rate, clip_norm)
    if kind == "sgd":
        return Sgd(learning_rate, clip_norm)
    raise ValueError(f"Unknown optimizer '{kind}'")
