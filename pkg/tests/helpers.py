from typing import Optional, Union

import numpy as np

from rd2.core.math_helpers import random_rotation
from rd2.core.pose import Pose
from rd2.core.twist import Twist
from rd2.core.units import Unit
from rd2.core.wrench import Wrench
from rd2.learning.actor import ActorConfig
from rd2.learning.learner import LearnerConfig
from rd2.learning.sequence import EpisodeId, Sequence, Transition

Comparable = Union[Pose, Wrench, Twist, Unit, np.ndarray, float]


def _as_array(value: Comparable) -> np.ndarray:
    if isinstance(value, Pose):
        return np.array(value.to_flat())
    if isinstance(value, (Wrench, Twist)):
        return value.as_array()
    if isinstance(value, Unit):
        return np.array([value.base_value])
    return np.asarray(value, dtype=np.float64)


def assert_almost_equal(
    left: Comparable,
    right: Comparable,
    places: float = 7,
    epsilon: Optional[float] = None,
):
    """Compare poses, wrenches, twists, units or arrays for approximate equality

    If ``epsilon`` is given, compare within an absolute difference of its value.
    Otherwise, compare the differences rounded to ``places``.
    """
    left_array = _as_array(left)
    right_array = _as_array(right)
    if left_array.shape != right_array.shape:
        raise AssertionError(
            f"Shapes differ: {left_array.shape} vs {right_array.shape}"
        )
    difference = np.abs(left_array - right_array)
    if epsilon is not None:
        eq = bool(np.all(difference <= epsilon))
    else:
        eq = bool(np.all(np.round(difference, int(places)) == 0))
    if not eq:
        raise AssertionError(
            "{} and {} not equal (largest difference {:.3e})".format(
                left, right, float(np.max(difference))
            )
        )


def random_pose(rng: np.random.Generator, scale: float = 0.5) -> Pose:
    """A pose with a uniform random rotation and a translation in a cube."""
    return Pose(random_rotation(rng), rng.uniform(-scale, scale, 3))


def random_wrench(rng: np.random.Generator, scale: float = 10.0) -> Wrench:
    return Wrench.from_array(rng.uniform(-scale, scale, 6))


def make_sequence(
    m: int, tag: float = 0.0, valid_count: Optional[int] = None, index: int = 0
) -> Sequence:
    """A sequence whose rewards all equal ``tag``, front padded to ``valid_count``."""
    valid_count = m if valid_count is None else valid_count
    transitions = [Transition.padding()] * (m - valid_count) + [
        Transition(np.full(6, tag), np.zeros(6), tag) for _ in range(valid_count)
    ]
    return Sequence.from_transitions(transitions, np.zeros(6), EpisodeId(0, index), 0)


TINY_LEARNER = LearnerConfig(
    n_step=2,
    sequence_length=4,
    num_batches=2,
    batch_size=2,
    target_update_frequency=5,
    min_iteration_time=0.0,
    replay_capacity=50,
    hidden=4,
    recurrent_hidden=4,
)
"""Learner settings small enough to train for a few iterations in a unit test"""

TINY_ACTORS = ActorConfig(num_actors=2, episodes_per_iteration=1, deterministic=True)
