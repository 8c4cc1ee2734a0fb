from __future__ import annotations

import logging
from typing import List, NamedTuple, Optional, Union

import numpy as np
from typing_extensions import Protocol

from rd2.assembly.mounts import MountedSensorEnv
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_kind import DoneReason
from rd2.assembly.task_spec import TaskSpec
from rd2.core.pose import Pose
from rd2.core.wrench import Wrench
from rd2.learning.network_params import NetworkParams
from rd2.learning.networks import RecurrentState, actor_forward

logger = logging.getLogger(__name__)


class Policy(Protocol):
    """Anything that maps a stream of wrench observations to twist actions."""

    def reset(self):
        ...

    def act(self, observation: Wrench) -> np.ndarray:
        ...


class NetworkPolicy:
    """The noise-free policy of an actor network, carrying its recurrent state."""

    def __init__(self, params: NetworkParams):
        self.params = params
        self._state = RecurrentState.zero(params.spec)

    def __repr__(self):
        return f"NetworkPolicy({self.params!r})"

    def reset(self):
        self._state = RecurrentState.zero(self.params.spec)

    def act(self, observation: Wrench) -> np.ndarray:
        action, self._state = actor_forward(
            self.params, observation.as_array()[None], self._state
        )
        return action[0]


class EvaluationMetrics(NamedTuple):
    episodes: int
    success_rate: float
    mean_reward: float
    """Mean undiscounted episode return, the PBT score"""
    mean_steps: float
    rewards: List[float]

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "success_rate": self.success_rate,
            "mean_reward": self.mean_reward,
            "mean_steps": self.mean_steps,
        }


def evaluate_policy(
    policy: Policy, env, num_episodes: int, seed: Optional[int] = None
) -> EvaluationMetrics:
    """Run ``num_episodes`` noise-free episodes.

    Episode ``k`` resets the environment with ``seed + k`` when a seed is given.
    """
    if num_episodes < 1:
        raise ValueError("Evaluation needs at least one episode")
    rewards, steps, successes = [], [], 0
    for k in range(num_episodes):
        policy.reset()
        observation = env.reset(None if seed is None else seed + k)
        total, count = 0.0, 0
        while True:
            result = env.step(policy.act(observation))
            total += result.reward
            count += 1
            observation = result.observation
            if result.done:
                successes += result.done_reason == DoneReason.SUCCESS
                break
        rewards.append(total)
        steps.append(count)
    metrics = EvaluationMetrics(
        num_episodes,
        successes / num_episodes,
        float(np.mean(rewards)),
        float(np.mean(steps)),
        rewards,
    )
    logger.debug("Evaluated %d episodes: %s", num_episodes, metrics.to_dict())
    return metrics


def transfer_rollout(
    policy: Policy,
    task: TaskSpec,
    training_params: PhysicsParams,
    mount: Union[str, Pose],
    num_episodes: int,
    seed: Optional[int] = None,
    correct: bool = True,
) -> EvaluationMetrics:
    """Evaluate a trained policy with its sensor carried at another mount.

    With ``correct`` set, readings are transformed back into the training sensor
    frame before the policy sees them.
    """
    env = MountedSensorEnv(task, training_params, mount, correct)
    return evaluate_policy(policy, env, num_episodes, seed)
