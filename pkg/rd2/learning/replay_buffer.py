"""Prioritized sequence replay with separate sequence and transition priorities.

Sequences are drawn in proportion to their sequence priority. Importance weights
are then computed per transition from the transition-level tree, so a sequence
that is likely to be picked because of a single surprising transition does not
down-weight its other, well predicted transitions.
"""

from __future__ import annotations

import logging
import threading
from typing import Iterable, List, NamedTuple, Optional

import numpy as np

from rd2.core.exceptions import (
    BufferNotReadyError,
    EmptyBufferError,
    NegativePriorityError,
    SequenceLengthMismatchError,
)
from rd2.learning.priorities import (
    DEFAULT_ETA,
    PRIORITY_FLOOR,
    importance_weights,
    transition_priorities,
)
from rd2.learning.sequence import Sequence, validate_sequence_length
from rd2.learning.sum_tree import SumTree

logger = logging.getLogger(__name__)

WEIGHT_NORMALIZATIONS = ("batch", "sequence")


class SampledBatch(NamedTuple):
    sequences: List[Sequence]
    slots: np.ndarray
    global_ids: np.ndarray
    """Identifiers used to detect slots overwritten before the priority update"""
    weights: np.ndarray
    """``[B, m]`` importance weights, zero at padding"""


class BufferStats(NamedTuple):
    size: int
    capacity: int
    total_appended: int
    total_sampled: int
    stale_updates: int
    mean_sequence_priority: float
    max_priority: float

    @property
    def fill(self) -> float:
        return self.size / self.capacity


class DualPriorityBuffer:
    """A fixed-capacity FIFO store of sequences with two sum trees.

    All public methods are safe to call from several actor threads and one
    learner thread at once.
    """

    def __init__(
        self,
        capacity: int,
        sequence_length: int,
        beta: float = 0.4,
        eta: float = DEFAULT_ETA,
        transition_level: bool = True,
        weight_normalization: str = "batch",
        backlog_limit: Optional[int] = None,
    ):
        """
        Args:
            capacity: The number of sequences held before the oldest is evicted.
            sequence_length: The even length ``m`` of every stored sequence.
            beta: The importance sampling exponent.
            eta: The max/mean mix used for sequence priorities.
            transition_level: When false, importance weights come from the
                sequence tree alone, one weight per sequence.
            weight_normalization: ``"batch"`` divides by the largest weight in
                the batch, ``"sequence"`` by the largest within each sequence.
            backlog_limit: How many never-sampled sequences may accumulate
                before ``wait_for_capacity`` blocks producers.
        """
        if capacity < 1:
            raise ValueError("Replay capacity must be positive")
        if weight_normalization not in WEIGHT_NORMALIZATIONS:
            raise ValueError(
                f"Unknown weight normalization '{weight_normalization}', "
                f"expected one of {WEIGHT_NORMALIZATIONS}"
            )
        validate_sequence_length(sequence_length)
        self.capacity = capacity
        self.beta = beta
        self.eta = eta
        self.transition_level = transition_level
        self.weight_normalization = weight_normalization
        self.backlog_limit = backlog_limit
        self._condition = threading.Condition()
        self._reset(sequence_length)

    def _reset(self, sequence_length: int):
        self.sequence_length = sequence_length
        self._store: List[Optional[Sequence]] = [None] * self.capacity
        self._global_ids = np.full(self.capacity, -1, dtype=np.int64)
        self._sampled = np.zeros(self.capacity, dtype=bool)
        self._sequence_tree = SumTree(self.capacity)
        self._transition_tree = SumTree(self.capacity * sequence_length)
        self._next_slot = 0
        self._next_global_id = 0
        self._size = 0
        self._valid_transitions = 0
        self._max_priority: Optional[float] = None
        self._total_appended = 0
        self._total_sampled = 0
        self._stale_updates = 0

    def __len__(self):
        return self._size

    def __repr__(self):
        return (
            f"DualPriorityBuffer(size={self._size}, capacity={self.capacity}, "
            f"m={self.sequence_length})"
        )

    @property
    def sequence_tree(self) -> SumTree:
        return self._sequence_tree

    @property
    def transition_tree(self) -> SumTree:
        return self._transition_tree

    @property
    def backlog(self) -> int:
        """The number of stored sequences never yet sampled."""
        with self._condition:
            return self._backlog_locked()

    def _backlog_locked(self) -> int:
        return int(np.count_nonzero((self._global_ids >= 0) & ~self._sampled))

    def _transition_leaves(self, slot: int) -> np.ndarray:
        m = self.sequence_length
        return np.arange(slot * m, (slot + 1) * m)

    def append(
        self,
        sequences: Iterable[Sequence],
        initial_priority: Optional[float] = None,
    ) -> List[int]:
        """Store sequences at the running max priority, evicting the oldest.

        The running max is the largest priority ever written back, or 1.0
        before the first update. An explicit ``initial_priority`` overrides it.

        Returns:
            The global ids assigned to the new sequences.

        Raises:
            SequenceLengthMismatchError: If a sequence's length differs from the
                buffer's current ``m``.
            NegativePriorityError: If ``initial_priority`` is negative.
        """
        if initial_priority is not None and initial_priority < 0:
            raise NegativePriorityError("Replay priorities must be non-negative")
        ids = []
        with self._condition:
            priority = (
                self._initial_priority_locked()
                if initial_priority is None
                else max(float(initial_priority), PRIORITY_FLOOR)
            )
            for sequence in sequences:
                if sequence.m != self.sequence_length:
                    raise SequenceLengthMismatchError(
                        self.sequence_length, sequence.m
                    )
                ids.append(self._append_locked(sequence, priority))
            self._condition.notify_all()
        return ids

    def _initial_priority_locked(self) -> float:
        return 1.0 if self._max_priority is None else self._max_priority

    def _append_locked(self, sequence: Sequence, priority: float) -> int:
        slot = self._next_slot
        evicted = self._store[slot]
        if evicted is not None:
            self._valid_transitions -= evicted.valid_count
        else:
            self._size += 1
        self._store[slot] = sequence
        global_id = self._next_global_id
        self._global_ids[slot] = global_id
        self._sampled[slot] = False
        self._next_global_id += 1
        self._next_slot = (slot + 1) % self.capacity
        self._valid_transitions += sequence.valid_count
        self._total_appended += 1
        # Both trees change in the same locked update so an evicted sequence
        # never keeps probability mass in either of them
        self._sequence_tree.update(slot, priority)
        self._transition_tree.update(
            self._transition_leaves(slot), np.where(sequence.valid, priority, 0.0)
        )
        return global_id

    def wait_for_capacity(self, timeout: Optional[float] = None) -> bool:
        """Block while the never-sampled backlog is at its limit.

        Returns:
            Whether there is room for more sequences.
        """
        if self.backlog_limit is None:
            return True
        with self._condition:
            return self._condition.wait_for(
                lambda: self._backlog_locked() < self.backlog_limit, timeout
            )

    def sample(
        self, batch_size: int, rng: np.random.Generator, min_size: int = 1
    ) -> SampledBatch:
        """Draw ``batch_size`` sequences by stratified proportional sampling.

        Raises:
            EmptyBufferError: If nothing is stored.
            BufferNotReadyError: If fewer than ``min_size`` sequences are stored.
        """
        with self._condition:
            if self._size == 0 or self._sequence_tree.total <= 0:
                raise EmptyBufferError("Cannot sample from an empty replay buffer")
            if self._size < min_size:
                raise BufferNotReadyError(self._size, min_size)
            total = self._sequence_tree.total
            segment = total / batch_size
            values = (np.arange(batch_size) + rng.uniform(size=batch_size)) * segment
            slots = self._sequence_tree.find_prefix(values)
            sequences = [self._store[slot] for slot in slots]
            global_ids = self._global_ids[slots].copy()
            weights = self._weights_locked(slots, sequences)
            self._sampled[slots] = True
            self._total_sampled += batch_size
            self._condition.notify_all()
        return SampledBatch(sequences, slots, global_ids, weights)

    def _weights_locked(self, slots: np.ndarray, sequences: List[Sequence]):
        valid = np.stack([s.valid for s in sequences])
        if self.transition_level:
            leaves = np.stack([self._transition_leaves(slot) for slot in slots])
            probabilities = (
                self._transition_tree.get(leaves) / self._transition_tree.total
            )
            population = self._valid_transitions
        else:
            probabilities = np.repeat(
                (self._sequence_tree.get(slots) / self._sequence_tree.total)[:, None],
                self.sequence_length,
                axis=1,
            )
            population = self._size
        weights = np.zeros(valid.shape)
        weights[valid] = importance_weights(probabilities[valid], population, self.beta)
        if self.weight_normalization == "batch":
            weights /= weights.max()
        else:
            row_max = weights.max(axis=1, keepdims=True)
            weights = np.divide(
                weights, row_max, out=np.zeros_like(weights), where=row_max > 0
            )
        return weights

    def update_priorities(
        self,
        slots,
        global_ids,
        sequence_priorities,
        abs_td: Optional[np.ndarray] = None,
    ) -> int:
        """Write new priorities back for sampled sequences.

        Slots whose sequence was evicted since sampling are skipped.

        Args:
            slots: The slots returned by ``sample``.
            global_ids: The global ids returned by ``sample``.
            sequence_priorities: One priority per slot.
            abs_td: ``[B, m]`` absolute TD errors for the transition tree.

        Returns:
            The number of stale updates skipped.

        Raises:
            NegativePriorityError: If any priority is negative. Nothing is
                written in that case.
        """
        slots = np.asarray(slots, dtype=np.int64)
        global_ids = np.asarray(global_ids, dtype=np.int64)
        sequence_priorities = np.asarray(sequence_priorities, dtype=np.float64)
        if np.any(sequence_priorities < 0) or (
            abs_td is not None and np.any(np.asarray(abs_td) < 0)
        ):
            raise NegativePriorityError("Replay priorities must be non-negative")
        stale = 0
        with self._condition:
            for row, (slot, global_id) in enumerate(zip(slots, global_ids)):
                if self._global_ids[slot] != global_id:
                    stale += 1
                    continue
                priority = max(float(sequence_priorities[row]), PRIORITY_FLOOR)
                self._sequence_tree.update(slot, priority)
                if abs_td is not None:
                    self._transition_tree.update(
                        self._transition_leaves(slot),
                        transition_priorities(abs_td[row], self._store[slot].valid),
                    )
                if self._max_priority is None or priority > self._max_priority:
                    self._max_priority = priority
            self._stale_updates += stale
        if stale:
            logger.debug("Skipped %d stale priority updates", stale)
        return stale

    def flush(self, sequence_length: Optional[int] = None):
        """Drop every stored sequence, optionally switching to a new ``m``."""
        with self._condition:
            if sequence_length is not None:
                validate_sequence_length(sequence_length)
            logger.info(
                "Flushing replay buffer of %d sequences (m %d -> %d)",
                self._size,
                self.sequence_length,
                sequence_length or self.sequence_length,
            )
            self._reset(sequence_length or self.sequence_length)
            self._condition.notify_all()

    def stats(self) -> BufferStats:
        with self._condition:
            live = self._global_ids >= 0
            priorities = self._sequence_tree.get(np.flatnonzero(live))
            return BufferStats(
                self._size,
                self.capacity,
                self._total_appended,
                self._total_sampled,
                self._stale_updates,
                float(priorities.mean()) if priorities.size else 0.0,
                self._initial_priority_locked(),
            )
