"""Exploration actors which roll out the latest policy snapshot into replay."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from rd2.assembly.task_kind import DoneReason
from rd2.core.exceptions import ConfigError
from rd2.core.twist import ActuationLimits
from rd2.learning.network_params import NetworkParams
from rd2.learning.networks import RecurrentState, actor_forward
from rd2.learning.replay_buffer import DualPriorityBuffer
from rd2.learning.sequence import Episode, EpisodeId, Transition, segment_episode

logger = logging.getLogger(__name__)

SIGMA_BASE_FRACTION = 0.4
SIGMA_DECAY = 0.1


@dataclass(frozen=True)
class ActorConfig:
    num_actors: int = 8
    episodes_per_iteration: int = 2
    """Episodes each actor contributes to one training iteration"""
    param_refresh_episodes: int = 1
    """Episodes between pulls of the latest policy snapshot"""
    sigma_base_fraction: float = SIGMA_BASE_FRACTION
    sigma_decay: float = SIGMA_DECAY
    deterministic: bool = False
    """Step actors round-robin on the calling thread instead of in threads"""

    def __post_init__(self):
        for name in ("num_actors", "episodes_per_iteration", "param_refresh_episodes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"actors.{name}", "Must be positive.")
        if self.sigma_base_fraction < 0 or not 0 < self.sigma_decay <= 1:
            raise ConfigError("actors.sigma_decay", "Must lie in (0, 1].")


def exploration_sigma(
    actor_id: int,
    num_actors: int,
    limits: ActuationLimits,
    base_fraction: float = SIGMA_BASE_FRACTION,
    decay: float = SIGMA_DECAY,
) -> np.ndarray:
    """Per-component Gaussian noise scale for one actor.

    Scales are spread geometrically from ``base_fraction`` of the actuation limit
    for actor 0 down by ``decay`` for the last actor.

    >>> from rd2.core.twist import ActuationLimits
    >>> exploration_sigma(1, 2, ActuationLimits(1.0, 1.0)).round(3).tolist()
    [0.04, 0.04, 0.04, 0.04, 0.04, 0.04]
    """
    exponent = actor_id / (num_actors - 1) if num_actors > 1 else 0.0
    return base_fraction * limits.as_array() * decay**exponent


class ActorStats(NamedTuple):
    episodes: int = 0
    transitions: int = 0
    successes: int = 0
    aborted: int = 0
    total_reward: float = 0.0

    def merged(self, other: ActorStats) -> ActorStats:
        return ActorStats(*(a + b for a, b in zip(self, other)))

    @property
    def mean_episode_reward(self) -> float:
        return self.total_reward / self.episodes if self.episodes else 0.0

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0


def rollout_episode(
    env,
    params: NetworkParams,
    sigma: np.ndarray,
    rng: np.random.Generator,
    episode_id: EpisodeId,
    seed: Optional[int] = None,
) -> Episode:
    """Run one noisy episode, carrying the recurrent state across steps."""
    limits = params.spec.limits.as_array()
    observation = env.reset(seed).as_array()
    state = RecurrentState.zero(params.spec)
    episode = Episode(episode_id)
    while True:
        action, state = actor_forward(params, observation[None], state)
        action = np.clip(action[0] + rng.normal(0.0, sigma), -limits, limits)
        result = env.step(action)
        success = result.done_reason == DoneReason.SUCCESS
        episode.transitions.append(
            Transition(observation, action, result.reward, success, True)
        )
        observation = result.observation.as_array()
        if result.done:
            episode.final_observation = observation
            episode.success = success
            return episode


class Actor:
    """One exploring actor with its own environment, noise scale and RNG."""

    def __init__(
        self,
        actor_id: int,
        env,
        sigma: np.ndarray,
        params_source: Callable[[], NetworkParams],
        buffer: DualPriorityBuffer,
        rng: np.random.Generator,
        refresh_episodes: int = 1,
        initial_priority: Optional[float] = None,
    ):
        self.actor_id = actor_id
        self.env = env
        self.sigma = sigma
        self.params_source = params_source
        self.buffer = buffer
        self.rng = rng
        self.refresh_episodes = refresh_episodes
        self.initial_priority = initial_priority
        self.episodes_started = 0
        self._params: Optional[NetworkParams] = None

    def __repr__(self):
        return f"Actor({self.actor_id}, episodes={self.episodes_started})"

    def run_episode(self) -> ActorStats:
        """Roll out, segment and store one episode.

        Environment failures abort only the episode; they are logged and reported
        in the returned stats.
        """
        if self._params is None or self.episodes_started % self.refresh_episodes == 0:
            self._params = self.params_source()
        episode_id = EpisodeId(self.actor_id, self.episodes_started)
        self.episodes_started += 1
        seed = int(self.rng.integers(2**31))
        try:
            episode = rollout_episode(
                self.env, self._params, self.sigma, self.rng, episode_id, seed
            )
        except Exception:
            logger.exception("Actor %d aborted episode %s", self.actor_id, episode_id)
            return ActorStats(aborted=1)
        self.buffer.append(
            segment_episode(episode, self.buffer.sequence_length),
            initial_priority=self.initial_priority,
        )
        return ActorStats(
            1, len(episode), int(episode.success), 0, episode.total_reward
        )


def run_actor(
    actor: Actor,
    episodes: Optional[int] = None,
    stop_event: Optional[threading.Event] = None,
    backlog_timeout: float = 0.1,
) -> ActorStats:
    """Run an actor until ``episodes`` are done or ``stop_event`` is set.

    Waits on the buffer between episodes while its backlog is full.
    """
    stats = ActorStats()
    done = 0
    while episodes is None or done < episodes:
        if stop_event is not None and stop_event.is_set():
            break
        if not actor.buffer.wait_for_capacity(backlog_timeout):
            continue
        stats = stats.merged(actor.run_episode())
        done += 1
    return stats


def run_round_robin(actors: List[Actor], episodes_each: int) -> ActorStats:
    """Run actors one episode at a time in a fixed order on the calling thread."""
    stats = ActorStats()
    for _ in range(episodes_each):
        for actor in actors:
            stats = stats.merged(actor.run_episode())
    return stats
