from __future__ import annotations

import math

import numpy as np

from rd2.core.exceptions import EmptyBufferError


class SumTree:
    """A binary tree over non-negative leaf priorities supporting prefix search.

    Leaves live in the second half of a flat array whose size is rounded up to a
    power of two. Every internal node is recomputed from its two children after
    an update rather than adjusted by a delta, so the root stays the exact
    float sum of the leaves under it no matter how many updates were applied.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"SumTree capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._depth = max(1, math.ceil(math.log2(capacity)))
        self._leaf_offset = 1 << self._depth
        self._nodes = np.zeros(2 * self._leaf_offset, dtype=np.float64)

    def __len__(self):
        return self.capacity

    def __repr__(self):
        return f"SumTree(capacity={self.capacity}, total={self.total})"

    @property
    def total(self) -> float:
        return float(self._nodes[1])

    @property
    def leaves(self) -> np.ndarray:
        """A read-only view of the leaf priorities."""
        view = self._nodes[self._leaf_offset : self._leaf_offset + self.capacity]
        view = view.view()
        view.flags.writeable = False
        return view

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.leaves))

    def get(self, indices) -> np.ndarray:
        return self._nodes[self._leaf_offset + np.asarray(indices, dtype=np.int64)]

    def update(self, indices, priorities):
        """Set leaf priorities and recompute every ancestor from its children.

        Repeated indices take the last given priority.
        """
        indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        priorities = np.broadcast_to(
            np.asarray(priorities, dtype=np.float64), indices.shape
        )
        if indices.size == 0:
            return
        if indices.min() < 0 or indices.max() >= self.capacity:
            raise IndexError(f"Leaf index out of range for capacity {self.capacity}")
        if np.any(priorities < 0) or not np.all(np.isfinite(priorities)):
            raise ValueError("Leaf priorities must be finite and non-negative")
        nodes = indices + self._leaf_offset
        self._nodes[nodes] = priorities
        for _ in range(self._depth):
            nodes = np.unique(nodes // 2)
            self._nodes[nodes] = self._nodes[2 * nodes] + self._nodes[2 * nodes + 1]

    def clear(self):
        self._nodes[:] = 0

    def rebuild(self):
        """Recompute all internal nodes from the leaves."""
        start = self._leaf_offset
        while start > 1:
            parents = np.arange(start // 2, start)
            self._nodes[parents] = (
                self._nodes[2 * parents] + self._nodes[2 * parents + 1]
            )
            start //= 2

    def root_error(self) -> float:
        """The relative difference between the root and a direct leaf sum."""
        direct = float(np.sum(self.leaves))
        if direct == 0:
            return abs(self.total)
        return abs(self.total - direct) / direct

    def find_prefix(self, values) -> np.ndarray:
        """Find the leaves whose cumulative priority ranges contain ``values``.

        Every value must lie in ``[0, total)``. Zero-priority leaves are never
        returned.

        >>> tree = SumTree(4)
        >>> tree.update([0, 1, 2, 3], [1.0, 0.0, 2.0, 1.0])
        >>> tree.find_prefix([0.5, 1.0, 2.9, 3.5]).tolist()
        [0, 2, 2, 3]
        """
        total = self.total
        if total <= 0:
            raise EmptyBufferError("Cannot search an empty sum tree")
        values = np.atleast_1d(np.asarray(values, dtype=np.float64)).copy()
        values = np.clip(values, 0.0, np.nextafter(total, 0.0))
        nodes = np.ones(values.shape, dtype=np.int64)
        for _ in range(self._depth):
            left = 2 * nodes
            left_sums = self._nodes[left]
            go_right = values >= left_sums
            values = np.where(go_right, values - left_sums, values)
            nodes = left + go_right
        leaves = nodes - self._leaf_offset
        return self._repair_zero_leaves(leaves)

    def _repair_zero_leaves(self, leaves: np.ndarray) -> np.ndarray:
        # Float rounding near a subtree boundary can land on an empty leaf
        priorities = self._nodes[self._leaf_offset + leaves]
        if np.all(priorities > 0) and np.all(leaves < self.capacity):
            return leaves
        populated = np.flatnonzero(self.leaves > 0)
        for i in np.flatnonzero((priorities <= 0) | (leaves >= self.capacity)):
            position = np.searchsorted(populated, leaves[i], side="right") - 1
            leaves[i] = populated[max(position, 0)]
        return leaves
