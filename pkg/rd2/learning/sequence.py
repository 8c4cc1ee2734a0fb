"""Episodes, fixed-length sequences, and the segmentation between them.

A sequence of even length ``m`` never crosses an episode boundary. Consecutive
sequences overlap by ``m / 2`` transitions, except that the last sequence of an
episode is shifted back so that it ends exactly at the final transition. Episodes
shorter than ``m`` become a single sequence padded in front with invalid
transitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence as SequenceType

import numpy as np

from rd2.core.exceptions import InvalidSegmentLengthError, SequenceLengthMismatchError
from rd2.core.math_helpers import ArrayLike


class EpisodeId(NamedTuple):
    actor_id: int
    index: int

    def __str__(self):
        return f"{self.actor_id}:{self.index}"


class Transition(NamedTuple):
    """One environment step as stored for replay."""

    obs: np.ndarray
    """The 6-component wrench observed before acting"""

    action: np.ndarray
    reward: float
    terminal: bool = False
    """Whether the episode ended in success at this step (no bootstrapping)"""
    valid: bool = True

    @classmethod
    def padding(cls) -> Transition:
        return cls(np.zeros(6), np.zeros(6), 0.0, False, False)


@dataclass
class Episode:
    """The transitions of one rollout and the observation after the last one."""

    episode_id: EpisodeId
    transitions: List[Transition] = field(default_factory=list)
    final_observation: Optional[np.ndarray] = None
    success: bool = False

    def __len__(self):
        return len(self.transitions)

    @property
    def total_reward(self) -> float:
        return float(sum(t.reward for t in self.transitions))


@dataclass(frozen=True, eq=False)
class Sequence:
    """``m`` consecutive transitions of one episode, the unit of replay.

    ``bootstrap_obs`` is the observation following the last transition, used to
    bootstrap n-step targets past the end of the sequence.
    """

    obs: np.ndarray
    """``[m, 6]``"""
    actions: np.ndarray
    """``[m, 6]``"""
    rewards: np.ndarray
    terminals: np.ndarray
    valid: np.ndarray
    bootstrap_obs: np.ndarray
    episode_id: EpisodeId
    start_index: int
    """Episode index of the first real transition"""

    @property
    def m(self) -> int:
        return self.rewards.shape[0]

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid))

    @classmethod
    def from_transitions(
        cls,
        transitions: SequenceType[Transition],
        bootstrap_obs: ArrayLike,
        episode_id: EpisodeId,
        start_index: int,
    ) -> Sequence:
        return cls(
            np.array([t.obs for t in transitions], dtype=np.float64),
            np.array([t.action for t in transitions], dtype=np.float64),
            np.array([t.reward for t in transitions], dtype=np.float64),
            np.array([t.terminal for t in transitions], dtype=bool),
            np.array([t.valid for t in transitions], dtype=bool),
            np.asarray(bootstrap_obs, dtype=np.float64),
            episode_id,
            start_index,
        )


def validate_sequence_length(m: int):
    if m < 2 or m % 2:
        raise InvalidSegmentLengthError(m)


def sequence_starts(length: int, m: int) -> List[int]:
    """The start indices of the sequences covering an episode of ``length`` steps.

    >>> sequence_starts(43, 16)
    [0, 8, 16, 24, 27]
    """
    validate_sequence_length(m)
    if length < 1:
        raise ValueError("Cannot segment an empty episode")
    if length <= m:
        return [0]
    half = m // 2
    starts = list(range(0, length - m + 1, half))
    if starts[-1] + m < length:
        starts.append(length - m)
    return starts


def segment_episode(episode: Episode, m: int) -> List[Sequence]:
    """Cut an episode into overlapping sequences of ``m`` transitions.

    Raises:
        InvalidSegmentLengthError: If ``m`` is odd or less than 2.
    """
    transitions = episode.transitions
    length = len(transitions)
    final_observation = episode.final_observation
    if final_observation is None:
        final_observation = np.zeros(6)
    sequences = []
    for start in sequence_starts(length, m):
        end = min(start + m, length)
        chunk = list(transitions[start:end])
        if len(chunk) < m:
            chunk = [Transition.padding()] * (m - len(chunk)) + chunk
        bootstrap = transitions[end].obs if end < length else final_observation
        sequences.append(
            Sequence.from_transitions(chunk, bootstrap, episode.episode_id, start)
        )
    return sequences


class SequenceBatch(NamedTuple):
    """Sequences stacked along a leading batch axis."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    terminals: np.ndarray
    valid: np.ndarray
    bootstrap_obs: np.ndarray

    @property
    def m(self) -> int:
        return self.rewards.shape[1]

    @classmethod
    def stack(cls, sequences: SequenceType[Sequence]) -> SequenceBatch:
        m = sequences[0].m
        for sequence in sequences:
            if sequence.m != m:
                raise SequenceLengthMismatchError(m, sequence.m)
        return cls(
            np.stack([s.obs for s in sequences]),
            np.stack([s.actions for s in sequences]),
            np.stack([s.rewards for s in sequences]),
            np.stack([s.terminals for s in sequences]),
            np.stack([s.valid for s in sequences]),
            np.stack([s.bootstrap_obs for s in sequences]),
        )
