"""The off-policy learner: n-step targets, recurrent DDPG updates, priorities."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from rd2.core.exceptions import ConfigError, SpecMismatchError
from rd2.core.twist import DEFAULT_LIMITS, ActuationLimits
from rd2.learning.network_params import NetworkParams, hard_update
from rd2.learning.network_spec import CellType, NetworkRole, NetworkSpec
from rd2.learning.networks import backward_through_time, unroll
from rd2.learning.optimizer import DEFAULT_CLIP_NORM, OPTIMIZERS, make_optimizer
from rd2.learning.priorities import compute_sequence_priority
from rd2.learning.replay_buffer import WEIGHT_NORMALIZATIONS, DualPriorityBuffer
from rd2.learning.sequence import Sequence, SequenceBatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LearnerConfig:
    """Learner hyperparameters. The PBT-tuned ones may change between iterations."""

    gamma: float = 0.997
    n_step: int = 5
    sequence_length: int = 16
    num_batches: int = 20
    """Learner steps per training iteration"""
    batch_size: int = 32
    target_update_frequency: int = 25_000
    """Learner steps between hard target syncs"""
    min_iteration_time: float = 30.0
    """Wall-clock floor (s) of one training iteration"""
    critic_lr: float = 1e-3
    actor_lr: float = 1e-4
    optimizer: str = "adam"
    clip_norm: Optional[float] = DEFAULT_CLIP_NORM
    replay_capacity: int = 2_000
    """Replay capacity in sequences"""
    min_replay_size: int = 0
    """Sequences required before learning; 0 means one batch"""
    beta: float = 0.4
    eta: float = 0.9
    transition_priorities: bool = True
    weight_normalization: str = "batch"
    burn_in: int = 0
    """Leading steps of each sequence used only to warm up the recurrent state"""
    recurrent: bool = True
    cell: CellType = CellType.GATED
    hidden: int = 256
    recurrent_hidden: int = 256

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise ConfigError("learner.gamma", "Must lie in [0, 1].")
        if self.sequence_length < 2 or self.sequence_length % 2:
            raise ConfigError("learner.sequence_length", "Must be even and >= 2.")
        if not 1 <= self.n_step <= self.sequence_length // 2:
            raise ConfigError(
                "learner.n_step",
                f"Must lie in [1, sequence_length / 2 = {self.sequence_length // 2}].",
            )
        for name in (
            "num_batches",
            "batch_size",
            "target_update_frequency",
            "replay_capacity",
            "hidden",
            "recurrent_hidden",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"learner.{name}", "Must be positive.")
        if self.critic_lr <= 0 or self.actor_lr <= 0:
            raise ConfigError("learner.critic_lr", "Learning rates must be positive.")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError("learner.optimizer", f"Expected one of {OPTIMIZERS}.")
        if self.weight_normalization not in WEIGHT_NORMALIZATIONS:
            raise ConfigError(
                "learner.weight_normalization",
                f"Expected one of {WEIGHT_NORMALIZATIONS}.",
            )
        if self.min_iteration_time < 0:
            raise ConfigError("learner.min_iteration_time", "Must be non-negative.")
        if not 0 <= self.burn_in < self.sequence_length:
            raise ConfigError("learner.burn_in", "Must lie in [0, sequence_length).")
        if not 0 <= self.eta <= 1:
            raise ConfigError("learner.eta", "Must lie in [0, 1].")
        if self.beta < 0:
            raise ConfigError("learner.beta", "Must be non-negative.")

    @property
    def replay_threshold(self) -> int:
        return max(self.min_replay_size, self.batch_size)

    def actor_spec(self, limits: ActuationLimits = DEFAULT_LIMITS) -> NetworkSpec:
        return NetworkSpec(
            NetworkRole.ACTOR,
            hidden=self.hidden,
            recurrent_hidden=self.recurrent_hidden,
            cell=self.cell,
            recurrent=self.recurrent,
            limits=limits,
        )

    def with_updates(self, updates: Mapping[str, Any]) -> LearnerConfig:
        return replace(self, **dict(updates))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["cell"] = self.cell.value
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> LearnerConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"learner.{sorted(unknown)[0]}", "Unknown field.")
        values = dict(data)
        if "cell" in values:
            try:
                values["cell"] = CellType(values["cell"])
            except ValueError:
                raise ConfigError(
                    "learner.cell", f"Unknown cell type '{values['cell']}'."
                )
        return cls(**values)


@dataclass(frozen=True)
class AgentNetworks:
    """The online and target actor and critic of one agent."""

    actor: NetworkParams
    critic: NetworkParams
    target_actor: NetworkParams
    target_critic: NetworkParams

    @classmethod
    def initialize(cls, actor_spec: NetworkSpec, rng: np.random.Generator):
        actor = NetworkParams.initialize(actor_spec, rng)
        critic = NetworkParams.initialize(actor_spec.critic(), rng)
        return cls(
            actor, critic, hard_update(actor, actor), hard_update(critic, critic)
        )

    def as_dict(self) -> Dict[str, NetworkParams]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class Targets(NamedTuple):
    targets: np.ndarray
    """``[B, m]`` n-step returns, zero at padding"""
    abs_td: np.ndarray
    """``[B, m]`` absolute TD errors against the online critic, zero at padding"""
    q: np.ndarray
    """``[B, m]`` online critic values"""


def _as_batch(sequences: Union[Sequence, SequenceBatch]) -> SequenceBatch:
    if isinstance(sequences, Sequence):
        return SequenceBatch.stack([sequences])
    return sequences


def nstep_returns(
    batch: SequenceBatch, bootstrap_values: np.ndarray, gamma: float, n: int
) -> np.ndarray:
    """Truncated n-step returns within each sequence.

    ``bootstrap_values[:, j]`` is the value of observation ``j``, where index ``m``
    stands for the bootstrap observation after the last transition. Near the end
    of a sequence the horizon shrinks to the steps that remain. A terminal
    transition ends the sum without bootstrapping.

        >>> from rd2.learning.sequence import SequenceBatch
        >>> batch = SequenceBatch(
        ...     np.zeros((1, 2, 6)), np.zeros((1, 2, 6)), np.array([[1.0, 2.0]]),
        ...     np.array([[False, False]]), np.array([[True, True]]), np.zeros((1, 6)))
        >>> nstep_returns(batch, np.array([[0.0, 0.0, 10.0]]), 0.5, 2).tolist()
        [[4.5, 7.0]]
    """
    if n < 1:
        raise ValueError(f"n-step horizon must be at least 1, got {n}")
    rewards = batch.rewards
    terminals = batch.terminals
    size, m = rewards.shape
    returns = np.zeros((size, m))
    for t in range(m):
        horizon = min(n, m - t)
        total = np.zeros(size)
        discount = np.ones(size)
        alive = np.ones(size, dtype=bool)
        for k in range(horizon):
            total += alive * discount * rewards[:, t + k]
            discount = discount * gamma
            alive = alive & ~terminals[:, t + k]
        total += alive * discount * bootstrap_values[:, t + horizon]
        returns[:, t] = total
    return returns * batch.valid


def compute_nstep_targets(
    sequences: Union[Sequence, SequenceBatch],
    critic: NetworkParams,
    target_actor: NetworkParams,
    target_critic: NetworkParams,
    gamma: float,
    n: int,
) -> Targets:
    """n-step targets from the target networks and TD errors of ``critic``.

    Recurrent networks are unrolled from a zero state at the start of every
    sequence. Padding steps are masked out of both unrolls.
    """
    batch = _as_batch(sequences)
    size, m = batch.rewards.shape
    extended_obs = np.concatenate((batch.obs, batch.bootstrap_obs[:, None]), axis=1)
    extended_valid = np.concatenate((batch.valid, np.ones((size, 1), bool)), axis=1)
    next_actions, _, _ = unroll(target_actor, extended_obs, valid=extended_valid)
    next_q, _, _ = unroll(
        target_critic,
        np.concatenate((extended_obs, next_actions), axis=2),
        valid=extended_valid,
    )
    targets = nstep_returns(batch, next_q[..., 0], gamma, n)
    q, _, _ = unroll(
        critic, np.concatenate((batch.obs, batch.actions), axis=2), valid=batch.valid
    )
    q = q[..., 0] * batch.valid
    abs_td = np.abs(targets - q) * batch.valid
    return Targets(targets, abs_td, q)


class LearnerMetrics(NamedTuple):
    critic_loss: float
    actor_loss: float
    mean_abs_td: float
    critic_grad_norm: float
    actor_grad_norm: float
    stale_updates: int
    target_synced: bool


def critic_gradients(
    batch: SequenceBatch,
    critic: NetworkParams,
    targets: np.ndarray,
    weights: np.ndarray,
    burn_in: int = 0,
) -> Tuple[Dict[str, np.ndarray], float]:
    """Gradients of the normalized weighted squared TD loss.

    No gradient flows into the first ``burn_in`` steps.
    """
    inputs = np.concatenate((batch.obs, batch.actions), axis=2)
    q, _, cache = unroll(critic, inputs, valid=batch.valid)
    q = q[..., 0]
    weight_sum = max(float(weights.sum()), 1e-12)
    error = (q - targets) * (weights > 0)
    loss = float(np.sum(weights * error**2) / weight_sum)
    grads, _ = backward_through_time(
        critic, 2 * weights * error / weight_sum, cache, burn_in
    )
    return grads, loss


def actor_gradients(
    batch: SequenceBatch,
    actor: NetworkParams,
    critic: NetworkParams,
    mask: np.ndarray,
    burn_in: int = 0,
) -> Tuple[Dict[str, np.ndarray], float]:
    """Deterministic policy gradients of ``-mean Q(o, actor(o))`` over ``mask``.

    No gradient flows into the first ``burn_in`` steps of either network.
    """
    actions, _, actor_cache = unroll(actor, batch.obs, valid=batch.valid)
    q, _, critic_cache = unroll(
        critic, np.concatenate((batch.obs, actions), axis=2), valid=batch.valid
    )
    count = max(float(mask.sum()), 1.0)
    loss = -float(np.sum(q[..., 0] * mask) / count)
    _, input_grads = backward_through_time(
        critic, -mask / count, critic_cache, burn_in
    )
    action_grads = input_grads[..., critic.spec.obs_dim :]
    grads, _ = backward_through_time(actor, action_grads, actor_cache, burn_in)
    return grads, loss


class Learner:
    """Owns the networks, optimizers and learner-step counter of one trial.

    Only the learner thread calls ``learner_step``; actors read ``networks.actor``,
    which is replaced wholesale after every step.
    """

    def __init__(
        self,
        config: LearnerConfig,
        buffer: DualPriorityBuffer,
        networks: AgentNetworks,
        rng: np.random.Generator,
    ):
        self.config = config
        self.buffer = buffer
        self.networks = networks
        self.rng = rng
        self.steps = 0
        self._make_optimizers()

    def _make_optimizers(self):
        config = self.config
        self.critic_optimizer = make_optimizer(
            config.optimizer, config.critic_lr, config.clip_norm
        )
        self.actor_optimizer = make_optimizer(
            config.optimizer, config.actor_lr, config.clip_norm
        )

    def __repr__(self):
        return f"Learner(steps={self.steps}, buffer={self.buffer!r})"

    @property
    def actor(self) -> NetworkParams:
        return self.networks.actor

    def load_networks(self, networks: AgentNetworks):
        """Replace all four networks, restarting the optimizer moments."""
        if networks.actor.spec != self.networks.actor.spec:
            raise SpecMismatchError(
                f"Cannot load {networks.actor.spec} into {self.networks.actor.spec}"
            )
        self.networks = networks
        self._make_optimizers()

    def reconfigure(self, config: LearnerConfig):
        """Adopt new hyperparameters, flushing replay if ``m`` changed."""
        if config.sequence_length != self.buffer.sequence_length:
            self.buffer.flush(config.sequence_length)
        self.buffer.beta = config.beta
        self.buffer.eta = config.eta
        self.config = config

    def learner_step(self) -> LearnerMetrics:
        """Sample a batch, update both networks, and write back priorities.

        Both gradients are taken with the parameters from before this step.

        Raises:
            BufferNotReadyError: If replay holds fewer than the refill threshold.
        """
        config = self.config
        networks = self.networks
        sampled = self.buffer.sample(
            config.batch_size, self.rng, config.replay_threshold
        )
        batch = SequenceBatch.stack(sampled.sequences)
        targets = compute_nstep_targets(
            batch,
            networks.critic,
            networks.target_actor,
            networks.target_critic,
            config.gamma,
            config.n_step,
        )
        loss_mask = batch.valid.astype(np.float64)
        loss_mask[:, : config.burn_in] = 0
        weights = sampled.weights * loss_mask
        critic_grads, critic_loss = critic_gradients(
            batch, networks.critic, targets.targets, weights, config.burn_in
        )
        actor_grads, actor_loss = actor_gradients(
            batch, networks.actor, networks.critic, loss_mask, config.burn_in
        )
        critic = self.critic_optimizer.apply(networks.critic, critic_grads)
        actor = self.actor_optimizer.apply(networks.actor, actor_grads)
        sequence_priorities = [
            compute_sequence_priority(td, config.eta, valid)
            for td, valid in zip(targets.abs_td, batch.valid)
        ]
        stale = self.buffer.update_priorities(
            sampled.slots, sampled.global_ids, sequence_priorities, targets.abs_td
        )
        self.steps += 1
        synced = self.steps % config.target_update_frequency == 0
        if synced:
            networks = replace(
                networks,
                target_actor=hard_update(networks.target_actor, actor),
                target_critic=hard_update(networks.target_critic, critic),
            )
            logger.debug("Synced target networks at learner step %d", self.steps)
        self.networks = replace(networks, actor=actor, critic=critic)
        return LearnerMetrics(
            critic_loss,
            actor_loss,
            float(targets.abs_td.sum() / max(batch.valid.sum(), 1)),
            self.critic_optimizer.last_gradient_norm,
            self.actor_optimizer.last_gradient_norm,
            stale,
            synced,
        )

    def run_batches(
        self, count: Optional[int] = None, deadline: Optional[float] = None
    ) -> List[LearnerMetrics]:
        """Run up to ``count`` learner steps, stopping early at ``deadline``."""
        count = self.config.num_batches if count is None else count
        metrics = []
        for _ in range(count):
            if deadline is not None and time.monotonic() > deadline:
                break
            metrics.append(self.learner_step())
        return metrics
