"""Binary parameter checkpoints and per-trial checkpoint directories.

A parameter file is laid out as::

    b"RD2P"                 magic
    u32                     format version
    u32                     length of the spec JSON
    bytes                   the NetworkSpec as UTF-8 JSON
    u64                     parameter snapshot version
    i64                     synced_from (-1 when unset)
    u64                     payload length in bytes
    f64[...]                parameters in ``NetworkSpec.param_shapes`` order

All integers and floats are little-endian.
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import yaml

from rd2.core.exceptions import CheckpointFormatError, SpecMismatchError
from rd2.learning.learner import AgentNetworks
from rd2.learning.network_params import NetworkParams
from rd2.learning.network_spec import NetworkSpec

logger = logging.getLogger(__name__)

MAGIC = b"RD2P"
FORMAT_VERSION = 1
PARAMS_SUFFIX = ".rd2p"
TRIAL_FILE = "trial.yaml"

_HEADER = struct.Struct("<4sII")
_FOOTER = struct.Struct("<QqQ")

PathLike = Union[str, Path]


def serialize_params(params: NetworkParams) -> bytes:
    spec_json = json.dumps(params.spec.to_dict(), sort_keys=True).encode("utf-8")
    payload = params.flat().astype("<f8").tobytes()
    synced_from = -1 if params.synced_from is None else params.synced_from
    return b"".join(
        (
            _HEADER.pack(MAGIC, FORMAT_VERSION, len(spec_json)),
            spec_json,
            _FOOTER.pack(params.version, synced_from, len(payload)),
            payload,
        )
    )


def deserialize_params(
    data: bytes, expected_spec: Optional[NetworkSpec] = None
) -> NetworkParams:
    """Decode a parameter file, bit-exactly.

    Raises:
        CheckpointFormatError: If the data is truncated, has a bad header, or an
            unsupported format version.
        SpecMismatchError: If ``expected_spec`` is given and differs from the
            stored spec.
    """
    if len(data) < _HEADER.size:
        raise CheckpointFormatError("Checkpoint is truncated")
    magic, version, spec_length = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"Bad checkpoint magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(
            f"Unsupported checkpoint format {version}, expected {FORMAT_VERSION}"
        )
    offset = _HEADER.size
    spec_end = offset + spec_length
    if len(data) < spec_end + _FOOTER.size:
        raise CheckpointFormatError("Checkpoint is truncated")
    try:
        spec = NetworkSpec.from_dict(json.loads(data[offset:spec_end]))
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointFormatError(f"Unreadable network spec: {e}")
    params_version, synced_from, payload_length = _FOOTER.unpack_from(data, spec_end)
    payload_start = spec_end + _FOOTER.size
    if len(data) != payload_start + payload_length:
        raise CheckpointFormatError(
            f"Payload holds {len(data) - payload_start} bytes, "
            f"header says {payload_length}"
        )
    if payload_length != spec.param_count * 8:
        raise CheckpointFormatError(
            f"Payload of {payload_length} bytes does not fit {spec.param_count} "
            "parameters"
        )
    if expected_spec is not None and spec != expected_spec:
        raise SpecMismatchError(
            f"Checkpoint holds {spec.to_dict()}, expected {expected_spec.to_dict()}"
        )
    flat = np.frombuffer(data, dtype="<f8", offset=payload_start)
    return NetworkParams.from_flat(
        spec,
        flat.astype(np.float64),
        params_version,
        None if synced_from < 0 else synced_from,
    )


def save_params(params: NetworkParams, path: PathLike):
    Path(path).write_bytes(serialize_params(params))


def load_params(
    path: PathLike, expected_spec: Optional[NetworkSpec] = None
) -> NetworkParams:
    path = Path(path)
    if path.is_dir():
        path = path / f"actor{PARAMS_SUFFIX}"
    if not path.exists():
        raise FileNotFoundError(f"No checkpoint at {path}")
    return deserialize_params(path.read_bytes(), expected_spec)


def save_agent_checkpoint(
    directory: PathLike, networks: AgentNetworks, metadata: Dict[str, Any]
) -> Path:
    """Write all four networks and a ``trial.yaml`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, params in networks.as_dict().items():
        save_params(params, directory / f"{name}{PARAMS_SUFFIX}")
    with open(directory / TRIAL_FILE, "w") as f:
        yaml.safe_dump(metadata, f, sort_keys=True)
    logger.debug("Wrote checkpoint %s", directory)
    return directory


def load_agent_checkpoint(
    directory: PathLike,
) -> Tuple[AgentNetworks, Dict[str, Any]]:
    directory = Path(directory)
    trial_file = directory / TRIAL_FILE
    if not trial_file.exists():
        raise FileNotFoundError(f"No trial checkpoint at {directory}")
    networks = AgentNetworks(
        **{
            name: load_params(directory / f"{name}{PARAMS_SUFFIX}")
            for name in ("actor", "critic", "target_actor", "target_critic")
        }
    )
    with open(trial_file) as f:
        metadata = yaml.safe_load(f) or {}
    return networks, metadata
