"""One RD2 training run: a learner, its replay buffer, and its actors."""

from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Union

import numpy as np

from rd2.assembly.environment import AssemblyEnv
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_spec import TaskSpec
from rd2.core.exceptions import BufferNotReadyError
from rd2.core.propagating_thread import PropagatingThread
from rd2.interface.checkpoint import load_agent_checkpoint, save_agent_checkpoint
from rd2.interface.jsonl import JsonlWriter
from rd2.learning.actor import (
    Actor,
    ActorConfig,
    ActorStats,
    exploration_sigma,
    run_actor,
    run_round_robin,
)
from rd2.learning.evaluation import EvaluationMetrics, NetworkPolicy, evaluate_policy
from rd2.learning.learner import AgentNetworks, Learner, LearnerConfig
from rd2.learning.replay_buffer import DualPriorityBuffer

logger = logging.getLogger(__name__)

TUNED_HYPERPARAMS = (
    "num_batches",
    "sequence_length",
    "target_update_frequency",
    "n_step",
    "min_iteration_time",
)
"""The learner fields population based training may change"""

_IDLE_WAIT = 0.005


class IterationMetrics(NamedTuple):
    trial_id: str
    iteration: int
    env_steps: int
    learner_steps: int
    mean_episode_reward: float
    success_rate: float
    buffer_fill: float
    mean_priority: float
    aborted_episodes: int
    critic_loss: float

    def to_dict(self) -> Dict[str, Any]:
        data = self._asdict()
        data["kind"] = "iteration"
        return data


class Trial:
    """A self-contained training run.

    In deterministic mode actors and the learner take turns on the calling thread
    and every random draw comes from generators spawned off ``seed``, so two runs
    with the same seed produce the same parameters and metrics.
    """

    def __init__(
        self,
        trial_id: str,
        task: TaskSpec,
        physics: PhysicsParams,
        learner_config: LearnerConfig,
        actor_config: ActorConfig,
        seed: int = 0,
        metrics: Optional[JsonlWriter] = None,
        backlog_limit: Optional[int] = None,
    ):
        self.trial_id = trial_id
        self.task = task
        self.physics = physics
        self.actor_config = actor_config
        self.seed = seed
        self.metrics = metrics
        self.iteration = 0
        self.env_steps = 0
        seeds = np.random.SeedSequence(seed).spawn(actor_config.num_actors + 2)
        init_rng, learner_rng = (np.random.default_rng(s) for s in seeds[:2])
        buffer = DualPriorityBuffer(
            learner_config.replay_capacity,
            learner_config.sequence_length,
            beta=learner_config.beta,
            eta=learner_config.eta,
            transition_level=learner_config.transition_priorities,
            weight_normalization=learner_config.weight_normalization,
            backlog_limit=None if actor_config.deterministic else backlog_limit,
        )
        networks = AgentNetworks.initialize(
            learner_config.actor_spec(physics.limits), init_rng
        )
        self.learner = Learner(learner_config, buffer, networks, learner_rng)
        self.actors = [
            Actor(
                i,
                AssemblyEnv(task, physics),
                exploration_sigma(
                    i,
                    actor_config.num_actors,
                    physics.limits,
                    actor_config.sigma_base_fraction,
                    actor_config.sigma_decay,
                ),
                self._policy_snapshot,
                buffer,
                np.random.default_rng(seeds[i + 2]),
                actor_config.param_refresh_episodes,
            )
            for i in range(actor_config.num_actors)
        ]

    def __repr__(self):
        return (
            f"Trial({self.trial_id!r}, iteration={self.iteration}, "
            f"env_steps={self.env_steps})"
        )

    def _policy_snapshot(self):
        return self.learner.networks.actor

    @property
    def buffer(self) -> DualPriorityBuffer:
        return self.learner.buffer

    @property
    def config(self) -> LearnerConfig:
        return self.learner.config

    @property
    def hyperparams(self) -> Dict[str, Any]:
        return {name: getattr(self.config, name) for name in TUNED_HYPERPARAMS}

    def apply_hyperparams(self, hyperparams: Mapping[str, Any]):
        """Adopt new tuned hyperparameters between iterations."""
        unknown = set(hyperparams) - set(TUNED_HYPERPARAMS)
        if unknown:
            raise ValueError(f"Not tunable: {sorted(unknown)}")
        self.learner.reconfigure(self.config.with_updates(hyperparams))

    def run_iteration(self) -> IterationMetrics:
        """Collect episodes and run up to ``num_batches`` learner steps."""
        start = time.monotonic()
        if self.actor_config.deterministic:
            stats = run_round_robin(
                self.actors, self.actor_config.episodes_per_iteration
            )
            losses = self._learn_available()
        else:
            stats, losses = self._run_concurrently()
        remaining = self.config.min_iteration_time - (time.monotonic() - start)
        if remaining > 0:
            time.sleep(remaining)
        self.iteration += 1
        self.env_steps += stats.transitions
        buffer_stats = self.buffer.stats()
        metrics = IterationMetrics(
            self.trial_id,
            self.iteration,
            self.env_steps,
            self.learner.steps,
            stats.mean_episode_reward,
            stats.success_rate,
            buffer_stats.fill,
            buffer_stats.mean_sequence_priority,
            stats.aborted,
            float(np.mean(losses)) if losses else 0.0,
        )
        if self.metrics is not None:
            self.metrics.write(metrics.to_dict())
        return metrics

    def _learn_available(self) -> List[float]:
        if len(self.buffer) < self.config.replay_threshold:
            return []
        return [m.critic_loss for m in self.learner.run_batches()]

    def _run_concurrently(self):
        episodes = self.actor_config.episodes_per_iteration
        threads = [
            PropagatingThread(
                run_actor,
                name=f"{self.trial_id}-actor-{actor.actor_id}",
                args=(actor, episodes),
            )
            for actor in self.actors
        ]
        for thread in threads:
            thread.start()
        losses: List[float] = []
        while len(losses) < self.config.num_batches:
            try:
                losses.append(self.learner.learner_step().critic_loss)
            except BufferNotReadyError:
                if not any(thread.is_alive() for thread in threads):
                    break
                time.sleep(_IDLE_WAIT)
        stats = ActorStats()
        for thread in threads:
            stats = stats.merged(thread.join())
        return stats, losses

    def evaluate(self, num_episodes: int, seed: Optional[int] = None):
        """Noise-free evaluation of the current policy on the training task."""
        metrics = evaluate_policy(
            NetworkPolicy(self.learner.networks.actor),
            AssemblyEnv(self.task, self.physics),
            num_episodes,
            seed,
        )
        if self.metrics is not None:
            record = metrics.to_dict()
            record.update(
                kind="evaluation",
                trial_id=self.trial_id,
                iteration=self.iteration,
                env_steps=self.env_steps,
            )
            self.metrics.write(record)
        return metrics

    def checkpoint_metadata(self) -> Dict[str, Any]:
        return {
            "trial_id": self.trial_id,
            "iteration": self.iteration,
            "env_steps": self.env_steps,
            "learner_steps": self.learner.steps,
            "hyperparams": self.hyperparams,
        }

    def save_checkpoint(self, directory: Union[str, Path]) -> Path:
        return save_agent_checkpoint(
            directory, self.learner.networks, self.checkpoint_metadata()
        )

    def load_checkpoint(self, directory: Union[str, Path], weights_only: bool = False):
        """Restore networks and hyperparameters from a checkpoint directory.

        With ``weights_only`` the counters of this trial are kept, which is how a
        trial copies another trial's state during exploitation.
        """
        networks, metadata = load_agent_checkpoint(directory)
        self.learner.load_networks(networks)
        self.apply_hyperparams(metadata.get("hyperparams", {}))
        if not weights_only:
            self.iteration = int(metadata.get("iteration", 0))
            self.env_steps = int(metadata.get("env_steps", 0))
            self.learner.steps = int(metadata.get("learner_steps", 0))


def train_round(
    trial: Trial, iterations: int, eval_episodes: int, eval_seed: int = 0
) -> EvaluationMetrics:
    """Train for ``iterations`` iterations, then evaluate."""
    for _ in range(iterations):
        trial.run_iteration()
    return trial.evaluate(eval_episodes, eval_seed)


def train_trial(
    trial: Trial,
    rounds: int,
    iterations_per_round: int = 5,
    eval_episodes: int = 10,
    eval_seed: int = 0,
    max_env_steps: Optional[int] = None,
    checkpoint_dir: Optional[Union[str, Path]] = None,
) -> Optional[EvaluationMetrics]:
    """Train a single trial without population based training.

    Stops after ``rounds`` rounds or once ``max_env_steps`` is reached.
    """
    result = None
    for _ in range(rounds):
        if max_env_steps is not None and trial.env_steps >= max_env_steps:
            break
        result = train_round(trial, iterations_per_round, eval_episodes, eval_seed)
        logger.info(
            "%s: iteration %d, %d env steps, eval reward %.3f, success %.2f",
            trial.trial_id,
            trial.iteration,
            trial.env_steps,
            result.mean_reward,
            result.success_rate,
        )
        if checkpoint_dir is not None:
            trial.save_checkpoint(checkpoint_dir)
    return result
