"""Recurrent actor and critic forward passes with exact backpropagation through time.

All arrays are batch-major: inputs are ``[B, T, input_dim]`` and outputs
``[B, T, output_dim]``. An optional ``valid`` mask ``[B, T]`` marks padding steps;
the recurrent state is held at zero through them, so a padded prefix behaves exactly
like a zero start state at the first real step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from rd2.core.exceptions import NonFiniteActivationError, SequenceLengthMismatchError
from rd2.learning.network_params import NetworkParams
from rd2.learning.network_spec import CellType, NetworkRole, NetworkSpec


class RecurrentState(NamedTuple):
    """The per-rollout memory of a recurrent network, one row per batch entry."""

    hidden: np.ndarray
    cell: np.ndarray

    @classmethod
    def zero(cls, spec: NetworkSpec, batch: int = 1) -> RecurrentState:
        return cls(
            np.zeros((batch, spec.recurrent_hidden)),
            np.zeros((batch, spec.recurrent_hidden)),
        )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class ForwardCache:
    """Intermediate values of one unroll, kept for the backward pass."""

    spec: NetworkSpec
    inputs: np.ndarray
    valid: np.ndarray
    pre_in: np.ndarray
    features: np.ndarray
    hidden_prev: List[np.ndarray]
    cell_prev: List[np.ndarray]
    cell_pre: List[np.ndarray]
    activations: List[np.ndarray]
    """Per step: gate values for gated cells, pre-activations otherwise"""
    hidden: np.ndarray
    pre_out: np.ndarray

    @property
    def steps(self) -> int:
        return self.inputs.shape[1]


def _check_finite(values: np.ndarray, spec: NetworkSpec, step: int):
    if not np.all(np.isfinite(values)):
        raise NonFiniteActivationError(spec.role.value, step)


def unroll(
    params: NetworkParams,
    inputs: np.ndarray,
    state0: Optional[RecurrentState] = None,
    valid: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, RecurrentState, ForwardCache]:
    """Run a network over a batch of sequences.

    Args:
        params: The network weights.
        inputs: ``[B, T, input_dim]`` inputs.
        state0: The state before the first step. Defaults to zeros.
        valid: ``[B, T]`` mask of real steps. Defaults to all valid.

    Returns:
        The ``[B, T, output_dim]`` outputs (scaled ``tanh`` for actors), the state
        after the last step, and the cache for ``backward_through_time``.

    Raises:
        NonFiniteActivationError: If any activation becomes NaN or infinite.
    """
    spec = params.spec
    inputs = np.asarray(inputs, dtype=np.float64)
    batch, steps, _ = inputs.shape
    if valid is None:
        valid = np.ones((batch, steps))
    valid = np.asarray(valid, dtype=np.float64)
    if valid.shape != (batch, steps):
        raise SequenceLengthMismatchError(steps, valid.shape[-1])
    if state0 is None:
        state0 = RecurrentState.zero(spec, batch)
    pre_in = inputs @ params["w_in"] + params["b_in"]
    features = np.maximum(pre_in, 0.0)
    h, c = state0.hidden, state0.cell
    hidden_prev, cell_prev, cell_pre, activations, hidden = [], [], [], [], []
    size = spec.recurrent_hidden
    for t in range(steps):
        mask = valid[:, t : t + 1]
        hidden_prev.append(h)
        cell_prev.append(c)
        z = features[:, t] @ params["w_x"] + params["b_cell"]
        if spec.recurrent:
            z = z + h @ params["w_h"]
        if spec.recurrent and spec.cell == CellType.GATED:
            gates = np.concatenate(
                (_sigmoid(z[:, : 3 * size]), np.tanh(z[:, 3 * size :])), axis=1
            )
            i, f, o, g = np.split(gates, 4, axis=1)
            c_raw = f * c + i * g
            h_raw = o * np.maximum(c_raw, 0.0)
            activations.append(gates)
            cell_pre.append(c_raw)
            c = mask * c_raw
        else:
            h_raw = np.maximum(z, 0.0)
            activations.append(z)
            cell_pre.append(c)
        h = mask * h_raw
        _check_finite(h, spec, t)
        hidden.append(h)
    hidden_stack = np.stack(hidden, axis=1)
    pre_out = hidden_stack @ params["w_out"] + params["b_out"]
    if spec.role == NetworkRole.ACTOR:
        outputs = spec.limits.as_array() * np.tanh(pre_out)
    else:
        outputs = pre_out
    for t in range(steps):
        _check_finite(outputs[:, t], spec, t)
    cache = ForwardCache(
        spec,
        inputs,
        valid,
        pre_in,
        features,
        hidden_prev,
        cell_prev,
        cell_pre,
        activations,
        hidden_stack,
        pre_out,
    )
    if not spec.recurrent:
        return outputs, state0, cache
    return outputs, RecurrentState(h, c), cache


def _batched(sequence: np.ndarray) -> Tuple[np.ndarray, bool]:
    sequence = np.asarray(sequence, dtype=np.float64)
    if sequence.ndim == 2:
        return sequence[None], True
    return sequence, False


def actor_forward(
    params: NetworkParams,
    obs_seq: np.ndarray,
    state0: Optional[RecurrentState] = None,
    valid: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, RecurrentState]:
    """Actions for an observation sequence, ``[T, 6]`` or batched ``[B, T, 6]``.

    Every action component lies within the actuation limits.
    """
    obs, single = _batched(obs_seq)
    actions, state, _ = unroll(params, obs, state0, valid)
    return (actions[0] if single else actions), state


def critic_forward(
    params: NetworkParams,
    obs_seq: np.ndarray,
    action_seq: np.ndarray,
    state0: Optional[RecurrentState] = None,
    valid: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, RecurrentState]:
    """Q values ``[T]`` (or ``[B, T]``) for observation and action sequences."""
    obs, single = _batched(obs_seq)
    actions, _ = _batched(action_seq)
    if obs.shape[:2] != actions.shape[:2]:
        raise SequenceLengthMismatchError(obs.shape[1], actions.shape[1])
    q, state, _ = unroll(params, np.concatenate((obs, actions), axis=2), state0, valid)
    q = q[..., 0]
    return (q[0] if single else q), state


def backward_through_time(
    params: NetworkParams,
    output_grads: np.ndarray,
    cache: ForwardCache,
    stop_before: int = 0,
) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """Exact gradients of a loss given its gradients with respect to the outputs.

    For a weighted per-step loss, ``output_grads`` holds the weighted derivative of
    each step's loss; padding steps should carry zero. Gradients are linear in
    ``output_grads``.

    Steps before ``stop_before`` are burn-in: their outputs get no gradient and
    the recurrent gradient is cut at the boundary, so the burn-in prefix only
    supplies the state the later steps start from.

    Args:
        params: The weights used for the cached forward pass.
        output_grads: ``[B, T, output_dim]`` (or ``[B, T]`` for critics).
        cache: The cache returned by ``unroll``.
        stop_before: The number of leading burn-in steps.

    Returns:
        The gradient of every parameter, and the ``[B, T, input_dim]`` gradient with
        respect to the inputs.

    Raises:
        SequenceLengthMismatchError: If ``output_grads`` does not cover the cached
            steps.
        ValueError: If ``stop_before`` lies outside ``[0, steps]``.
    """
    spec = cache.spec
    grads_out = np.asarray(output_grads, dtype=np.float64)
    if grads_out.ndim == 2:
        grads_out = grads_out[..., None]
    if grads_out.shape[:2] != cache.inputs.shape[:2]:
        raise SequenceLengthMismatchError(cache.steps, grads_out.shape[1])
    if not 0 <= stop_before <= cache.steps:
        raise ValueError(f"stop_before must lie in [0, {cache.steps}]")
    grads_out = grads_out.copy()
    grads_out[:, :stop_before] = 0.0
    if spec.role == NetworkRole.ACTOR:
        squashed = np.tanh(cache.pre_out)
        d_pre_out = grads_out * spec.limits.as_array() * (1.0 - squashed**2)
    else:
        d_pre_out = grads_out
    grads = {name: np.zeros(shape) for name, shape in spec.param_shapes.items()}
    grads["w_out"] = np.einsum("bth,bto->ho", cache.hidden, d_pre_out)
    grads["b_out"] = d_pre_out.sum(axis=(0, 1))
    d_hidden = d_pre_out @ params["w_out"].T
    d_features = np.zeros_like(cache.features)
    size = spec.recurrent_hidden
    dh_next = np.zeros((cache.inputs.shape[0], size))
    dc_next = np.zeros_like(dh_next)
    gated = spec.recurrent and spec.cell == CellType.GATED
    for t in reversed(range(stop_before, cache.steps)):
        mask = cache.valid[:, t : t + 1]
        dh_raw = mask * (d_hidden[:, t] + dh_next)
        if gated:
            i, f, o, g = np.split(cache.activations[t], 4, axis=1)
            c_raw = cache.cell_pre[t]
            dc_raw = mask * dc_next + dh_raw * o * (c_raw > 0)
            d_o = dh_raw * np.maximum(c_raw, 0.0)
            d_i = dc_raw * g
            d_f = dc_raw * cache.cell_prev[t]
            d_g = dc_raw * i
            dz = np.concatenate(
                (
                    d_i * i * (1 - i),
                    d_f * f * (1 - f),
                    d_o * o * (1 - o),
                    d_g * (1 - g**2),
                ),
                axis=1,
            )
            dc_next = dc_raw * f
        else:
            dz = dh_raw * (cache.activations[t] > 0)
        grads["w_x"] += cache.features[:, t].T @ dz
        grads["b_cell"] += dz.sum(axis=0)
        d_features[:, t] = dz @ params["w_x"].T
        if spec.recurrent:
            grads["w_h"] += cache.hidden_prev[t].T @ dz
            dh_next = dz @ params["w_h"].T
    d_pre_in = d_features * (cache.pre_in > 0)
    grads["w_in"] = np.einsum("bti,bth->ih", cache.inputs, d_pre_in)
    grads["b_in"] = d_pre_in.sum(axis=(0, 1))
    input_grads = d_pre_in @ params["w_in"].T
    return grads, input_grads


def gradient_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
