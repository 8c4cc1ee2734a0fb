from __future__ import annotations

from typing import Dict, Mapping, Optional

import numpy as np

from rd2.core.exceptions import NonFiniteValueError, SpecMismatchError
from rd2.learning.network_spec import NetworkSpec

HEAD_SCALE = 1e-3
"""Initial output layers are shrunk by this so fresh policies barely move."""


class NetworkParams:
    """An immutable snapshot of one network's weights.

    Snapshots are never modified in place; an optimizer step or target sync produces a
    new snapshot with a larger ``version``. This makes handing the latest snapshot to
    concurrent actors a plain reference assignment.
    """

    __slots__ = ("spec", "arrays", "version", "synced_from")

    def __init__(
        self,
        spec: NetworkSpec,
        arrays: Mapping[str, np.ndarray],
        version: int = 0,
        synced_from: Optional[int] = None,
    ):
        """
        Args:
            spec: The network topology.
            arrays: One array per entry of ``spec.param_shapes``. Copied.
            version: The update counter of this snapshot.
            synced_from: For target networks, the online version last copied in.

        Raises:
            SpecMismatchError: If the arrays do not match the spec's shapes.
            NonFiniteValueError: If any weight is NaN or infinite.
        """
        if set(arrays) != set(spec.param_shapes):
            raise SpecMismatchError(
                f"Expected parameters {sorted(spec.param_shapes)}, "
                f"got {sorted(arrays)}"
            )
        frozen: Dict[str, np.ndarray] = {}
        for name, shape in spec.param_shapes.items():
            array = np.array(arrays[name], dtype=np.float64)
            if array.shape != shape:
                raise SpecMismatchError(
                    f"Parameter '{name}' has shape {array.shape}, expected {shape}"
                )
            if not np.all(np.isfinite(array)):
                raise NonFiniteValueError(f"network parameter '{name}'")
            array.flags.writeable = False
            frozen[name] = array
        self.spec = spec
        self.arrays = frozen
        self.version = version
        self.synced_from = synced_from

    @classmethod
    def initialize(
        cls, spec: NetworkSpec, rng: np.random.Generator, head_scale: float = HEAD_SCALE
    ) -> NetworkParams:
        """Fresh weights: fan-in uniform, orthogonal recurrent kernels, small heads."""
        arrays = {}
        for name, shape in spec.param_shapes.items():
            if name.startswith("b_"):
                arrays[name] = np.zeros(shape)
            elif name == "w_h":
                arrays[name] = _orthogonal_blocks(shape, rng)
            else:
                bound = 1.0 / np.sqrt(shape[0])
                arrays[name] = rng.uniform(-bound, bound, shape)
        arrays["w_out"] = arrays["w_out"] * head_scale
        return cls(spec, arrays)

    @classmethod
    def zeros(cls, spec: NetworkSpec) -> NetworkParams:
        return cls(spec, {n: np.zeros(s) for n, s in spec.param_shapes.items()})

    @classmethod
    def from_flat(
        cls,
        spec: NetworkSpec,
        flat: np.ndarray,
        version: int = 0,
        synced_from: Optional[int] = None,
    ) -> NetworkParams:
        """Rebuild parameters from one vector in ``spec.param_shapes`` order."""
        flat = np.asarray(flat, dtype=np.float64).reshape(-1)
        if flat.size != spec.param_count:
            raise SpecMismatchError(
                f"Expected {spec.param_count} parameter values, got {flat.size}"
            )
        arrays = {}
        offset = 0
        for name, shape in spec.param_shapes.items():
            size = int(np.prod(shape))
            arrays[name] = flat[offset : offset + size].reshape(shape)
            offset += size
        return cls(spec, arrays, version, synced_from)

    def flat(self) -> np.ndarray:
        names = self.spec.param_shapes
        return np.concatenate([self.arrays[n].reshape(-1) for n in names])

    def with_arrays(self, arrays: Mapping[str, np.ndarray]) -> NetworkParams:
        """A new snapshot with the given weights and the next version number."""
        return NetworkParams(self.spec, arrays, self.version + 1, self.synced_from)

    def max_abs_difference(self, other: NetworkParams) -> float:
        if other.spec != self.spec:
            raise SpecMismatchError("Cannot compare parameters of different specs")
        return max(
            float(np.max(np.abs(self.arrays[n] - other.arrays[n]), initial=0.0))
            for n in self.arrays
        )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __repr__(self):
        return (
            f"NetworkParams({self.spec.role.value}, {self.spec.param_count} weights, "
            f"version={self.version})"
        )


def _orthogonal_blocks(shape, rng: np.random.Generator) -> np.ndarray:
    rows, columns = shape
    blocks = []
    for _ in range(columns // rows):
        q, r = np.linalg.qr(rng.normal(size=(rows, rows)))
        blocks.append(q * np.sign(np.diag(r)))
    return np.concatenate(blocks, axis=1)


def hard_update(target: NetworkParams, online: NetworkParams) -> NetworkParams:
    """Copy ``online``'s weights into a new version of ``target``.

    Raises:
        SpecMismatchError: If the networks have different topologies.
    """
    if target.spec != online.spec:
        raise SpecMismatchError(f"Cannot sync {target.spec} from {online.spec}")
    return NetworkParams(
        target.spec, online.arrays, target.version + 1, synced_from=online.version
    )
