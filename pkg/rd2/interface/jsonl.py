"""Append-only JSON Lines streams: metrics, PBT mutation audit, episode traces."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Union

import numpy as np

from rd2.assembly.environment import TraceRecord
from rd2.assembly.mounts import mount_correction
from rd2.core.geom import pose_inverse, wrench_transform
from rd2.core.pose import Pose
from rd2.core.twist import Twist
from rd2.core.wrench import Wrench

PathLike = Union[str, Path]


def _plain(value: Any) -> Any:
    if isinstance(value, (Wrench, Twist, Pose)):
        return value.to_flat()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def encode_record(record: Mapping[str, Any]) -> str:
    """One JSON line with sorted keys, so equal records give equal bytes.

    >>> encode_record({"b": np.float64(1.5), "a": [1, 2]})
    '{"a": [1, 2], "b": 1.5}'
    """
    return json.dumps(_plain(record), sort_keys=True)


class JsonlWriter:
    """A thread-safe appender of records to one ``.jsonl`` file."""

    def __init__(self, path: PathLike, truncate: bool = True):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if truncate:
            self.path.write_text("")
        self._lock = threading.Lock()

    def __repr__(self):
        return f"JsonlWriter({str(self.path)!r})"

    def write(self, record: Mapping[str, Any]):
        line = encode_record(record)
        with self._lock:
            with open(self.path, "a") as f:
                f.write(line + "\n")

    def write_all(self, records):
        for record in records:
            self.write(record)


def read_records(path: PathLike) -> List[Dict[str, Any]]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def iter_records(path: PathLike) -> Iterator[Dict[str, Any]]:
    with open(path) as f:
        for line in f:
            if line.strip():
                yield json.loads(line)


class TraceWriter(JsonlWriter):
    """Records every environment step of an ``AssemblyEnv`` as a trace line.

    Pass ``writer.record`` as the environment's recorder.
    """

    def __init__(self, path: PathLike, episode: int = 0):
        super().__init__(path)
        self.episode = episode

    def record(self, record: TraceRecord):
        data = trace_record_to_dict(record)
        data["episode"] = self.episode
        self.write(data)


def trace_record_to_dict(record: TraceRecord) -> Dict[str, Any]:
    return {
        "t": record.t,
        "obs": record.obs.to_flat(),
        "action": record.action.to_flat(),
        "reward": record.reward,
        "done": record.done,
    }


def trace_record_from_dict(data: Mapping[str, Any]) -> TraceRecord:
    return TraceRecord(
        int(data["t"]),
        Wrench.from_array(data["obs"]),
        Twist.from_array(data["action"]),
        float(data["reward"]),
        bool(data["done"]),
    )


def read_trace(path: PathLike) -> List[TraceRecord]:
    return [trace_record_from_dict(r) for r in iter_records(path)]


def replay_trace_through_mount(
    records: List[TraceRecord], training_sensor: Pose, mount: Pose
) -> List[TraceRecord]:
    """Re-express a recorded trace as a sensor at ``mount`` would have read it.

    Observations recorded in the ``training_sensor`` frame are mapped into the
    ``mount`` frame; actions and rewards are unchanged.
    """
    to_mount = pose_inverse(mount_correction(training_sensor, mount))
    return [r._replace(obs=wrench_transform(to_mount, r.obs)) for r in records]
