"""YAML experiment configuration with includes and built-in profiles.

A config file is a mapping with the optional sections ``task``, ``physics``,
``learner``, ``actors``, ``population`` and ``hyper_space`` plus a few top-level
scalars. A top-level ``include`` lists other files (relative to the including
one) which are merged first, in order, before the including file's own values.
A ``profile`` (``desk``, ``full`` or ``smoke``) supplies defaults beneath
everything.

Lengths and angles may be given as numbers in SI units or as quantity strings
like ``"2mm"`` and ``"5deg"``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from rd2.assembly.offset_distribution import OffsetDistribution, difficulty_level
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_kind import ActionFrame, TaskKind
from rd2.assembly.task_spec import TaskSpec
from rd2.core import env
from rd2.core.exceptions import ConfigError
from rd2.core.pose import Pose
from rd2.core.twist import ActuationLimits
from rd2.core.units import Radian, to_base_value
from rd2.learning.actor import ActorConfig
from rd2.learning.learner import LearnerConfig
from rd2.pbt.hyper_space import HyperSpace
from rd2.pbt.population_config import PopulationConfig

PathLike = Union[str, Path]

DEFAULT_PROFILE = "desk"

PROFILES: Dict[str, Dict[str, Any]] = {
    "desk": {
        "learner": {
            "hidden": 64,
            "recurrent_hidden": 64,
            "sequence_length": 16,
            "n_step": 4,
            "num_batches": 10,
            "batch_size": 16,
            "target_update_frequency": 250,
            "min_iteration_time": 2,
        },
        "actors": {"num_actors": 2},
        "population": {"num_trials": 4, "rounds": 40, "max_env_steps": 300_000},
        "hyper_space": {"base": "desk"},
    },
    "full": {
        "actors": {"num_actors": 8},
        "population": {"num_trials": 8, "rounds": 100},
        "hyper_space": {"base": "full"},
    },
    "smoke": {
        "task": {"max_steps": 50},
        "learner": {
            "hidden": 8,
            "recurrent_hidden": 8,
            "sequence_length": 8,
            "n_step": 2,
            "num_batches": 2,
            "batch_size": 4,
            "target_update_frequency": 100,
            "min_iteration_time": 0,
            "replay_capacity": 200,
        },
        "actors": {"num_actors": 2, "episodes_per_iteration": 1},
        "population": {
            "num_trials": 1,
            "rounds": 50,
            "iterations_per_eval": 2,
            "eval_episodes": 2,
            "max_env_steps": 5_000,
            "exploit": False,
        },
        "hyper_space": {"base": "desk"},
    },
}

_BASE_SPACES = {"desk": HyperSpace.desk, "full": HyperSpace.full}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run, given its seed."""

    task: TaskSpec
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    actors: ActorConfig = field(default_factory=ActorConfig)
    population: PopulationConfig = field(default_factory=PopulationConfig)
    hyper_space: HyperSpace = field(default_factory=HyperSpace.desk)
    seed: int = 0
    eval_seed: int = 10_000
    """Seed of the first evaluation episode"""
    output_dir: str = "runs"
    backlog_limit: Optional[int] = None
    """Never-sampled sequences allowed in replay before actors wait"""

    def with_deterministic(self, deterministic: bool = True) -> ExperimentConfig:
        return replace(self, actors=replace(self.actors, deterministic=deterministic))

    def with_seed(self, seed: int) -> ExperimentConfig:
        return replace(self, seed=seed)

    @property
    def run_root(self) -> Path:
        """The output root, overridden by ``RD2_RUN_DIR`` when set."""
        return env.run_dir_override() or Path(self.output_dir)


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge mappings; everything else in ``override`` replaces.

    >>> deep_merge({"a": {"b": 1, "c": 2}}, {"a": {"c": 3}})
    {'a': {'b': 1, 'c': 3}}
    """
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _section(data: Mapping[str, Any], name: str) -> Dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, Mapping):
        raise ConfigError(name, "Expected a mapping.")
    return dict(section)


def _check_keys(section: Mapping[str, Any], allowed, prefix: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", "Unknown field.")


def _length(value: Any, path: str) -> float:
    try:
        return to_base_value(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e))


def _angle(value: Any, path: str) -> float:
    try:
        return to_base_value(value, Radian)
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e))


def _vector(values: Any, path: str, convert) -> List[float]:
    if not isinstance(values, (list, tuple)) or len(values) != 3:
        raise ConfigError(path, "Expected 3 values.")
    return [convert(v, f"{path}[{i}]") for i, v in enumerate(values)]


def _pose(values: Any, path: str) -> Pose:
    try:
        return Pose.from_flat([float(v) for v in values])
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e))


def _parse_offset(section: Mapping[str, Any]) -> OffsetDistribution:
    _check_keys(
        section,
        ("linear", "angular", "linear_jitter", "angular_jitter"),
        "task.initial_offset",
    )
    return OffsetDistribution(
        _vector(
            section.get("linear", [0, 0, 0]), "task.initial_offset.linear", _length
        ),
        _vector(
            section.get("angular", [0, 0, 0]), "task.initial_offset.angular", _angle
        ),
        _length(section.get("linear_jitter", 0), "task.initial_offset.linear_jitter"),
        _angle(section.get("angular_jitter", 0), "task.initial_offset.angular_jitter"),
    )


_TASK_KEYS = (
    "kind",
    "clearance",
    "level",
    "initial_offset",
    "success_epsilon",
    "success_bonus",
    "max_steps",
    "socket_pose",
    "action_frame",
    "lambda_rot",
)


def parse_task(section: Mapping[str, Any]) -> TaskSpec:
    _check_keys(section, _TASK_KEYS, "task")
    if "kind" not in section:
        raise ConfigError("task.kind", "A task kind is required.")
    try:
        kind = TaskKind.from_name(str(section["kind"]))
    except ValueError as e:
        raise ConfigError("task.kind", str(e))
    if "level" in section and "initial_offset" in section:
        raise ConfigError("task.level", "Give either a level or an initial_offset.")
    kwargs: Dict[str, Any] = {}
    if "clearance" in section:
        kwargs["clearance"] = _length(section["clearance"], "task.clearance")
    for name, convert in (
        ("success_epsilon", float),
        ("success_bonus", float),
        ("max_steps", int),
        ("lambda_rot", float),
    ):
        if name in section:
            kwargs[name] = convert(section[name])
    if "socket_pose" in section:
        kwargs["socket_pose"] = _pose(section["socket_pose"], "task.socket_pose")
    if "action_frame" in section:
        try:
            kwargs["action_frame"] = ActionFrame[str(section["action_frame"]).upper()]
        except KeyError:
            raise ConfigError("task.action_frame", "Expected 'world' or 'socket'.")
    if "initial_offset" in section:
        kwargs["initial_offset"] = _parse_offset(section["initial_offset"] or {})
    else:
        try:
            kwargs["initial_offset"] = difficulty_level(int(section.get("level", 0)))
        except ValueError as e:
            raise ConfigError("task.level", str(e))
    if kind == TaskKind.LAP_JOINT:
        return TaskSpec.lap_joint(**kwargs)
    return TaskSpec.peg_in_hole(**kwargs)


def task_to_dict(task: TaskSpec) -> Dict[str, Any]:
    return {
        "kind": task.kind.config_name,
        "clearance": float(task.clearance),
        "initial_offset": task.initial_offset.to_dict(),
        "success_epsilon": float(task.success_epsilon),
        "success_bonus": float(task.success_bonus),
        "max_steps": int(task.max_steps),
        "socket_pose": task.socket_pose.to_flat(),
        "action_frame": task.action_frame.name.lower(),
        "lambda_rot": float(task.lambda_rot),
    }


_PHYSICS_LENGTHS = (
    "max_penetration",
    "penetration_tolerance",
    "deep_penetration_limit",
)


def parse_physics(section: Mapping[str, Any]) -> PhysicsParams:
    allowed = [f.name for f in fields(PhysicsParams)]
    _check_keys(section, allowed, "physics")
    kwargs: Dict[str, Any] = {}
    for name, value in section.items():
        path = f"physics.{name}"
        if name == "sensor_pose":
            kwargs[name] = _pose(value, path)
        elif name == "limits":
            if not isinstance(value, Mapping) or set(value) != {"v_max", "w_max"}:
                raise ConfigError(path, "Expected 'v_max' and 'w_max'.")
            kwargs[name] = ActuationLimits(
                float(value["v_max"]), float(value["w_max"])
            )
        elif name in _PHYSICS_LENGTHS:
            kwargs[name] = _length(value, path)
        else:
            try:
                kwargs[name] = float(value)
            except (TypeError, ValueError):
                raise ConfigError(path, "Expected a number.")
    return PhysicsParams(**kwargs)


def physics_to_dict(physics: PhysicsParams) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    for f in fields(physics):
        value = getattr(physics, f.name)
        if isinstance(value, Pose):
            data[f.name] = value.to_flat()
        elif isinstance(value, ActuationLimits):
            data[f.name] = {"v_max": value.v_max, "w_max": value.w_max}
        else:
            data[f.name] = float(value)
    return data


def parse_hyper_space(section: Mapping[str, Any]) -> HyperSpace:
    section = dict(section)
    base = section.pop("base", DEFAULT_PROFILE)
    if base not in _BASE_SPACES:
        raise ConfigError("hyper_space.base", f"Expected one of {list(_BASE_SPACES)}.")
    try:
        return _BASE_SPACES[base]().with_overrides(section)
    except (TypeError, ValueError) as e:
        raise ConfigError("hyper_space", str(e))


def _parse_dataclass(cls, section: Mapping[str, Any], prefix: str):
    _check_keys(section, [f.name for f in fields(cls)], prefix)
    try:
        return cls(**section)
    except TypeError as e:
        raise ConfigError(prefix, str(e))


_TOP_LEVEL = (
    "profile",
    "task",
    "physics",
    "learner",
    "actors",
    "population",
    "hyper_space",
    "seed",
    "eval_seed",
    "output_dir",
    "backlog_limit",
)


def parse_config(
    data: Mapping[str, Any], profile: Optional[str] = None
) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from a mapping over a profile's defaults.

    Raises:
        ConfigError: Naming the dotted path of the first bad field.
    """
    data = dict(data or {})
    profile = profile or data.pop("profile", None) or DEFAULT_PROFILE
    data.pop("profile", None)
    if profile not in PROFILES:
        raise ConfigError("profile", f"Unknown profile '{profile}'.")
    _check_keys(data, _TOP_LEVEL, "config")
    merged = deep_merge(PROFILES[profile], data)
    try:
        learner_config = LearnerConfig.from_dict(_section(merged, "learner"))
    except TypeError as e:
        raise ConfigError("learner", str(e))
    return ExperimentConfig(
        task=parse_task(_section(merged, "task")),
        physics=parse_physics(_section(merged, "physics")),
        learner=learner_config,
        actors=_parse_dataclass(ActorConfig, _section(merged, "actors"), "actors"),
        population=PopulationConfig.from_dict(_section(merged, "population")),
        hyper_space=parse_hyper_space(_section(merged, "hyper_space")),
        seed=int(merged.get("seed", 0)),
        eval_seed=int(merged.get("eval_seed", 10_000)),
        output_dir=str(merged.get("output_dir", "runs")),
        backlog_limit=merged.get("backlog_limit"),
    )


def config_to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    """A plain mapping which ``parse_config`` turns back into ``config``."""
    hyper_space = {"base": "full"}
    hyper_space.update(config.hyper_space.to_dict())
    return {
        "task": task_to_dict(config.task),
        "physics": physics_to_dict(config.physics),
        "learner": config.learner.to_dict(),
        "actors": {f.name: getattr(config.actors, f.name) for f in fields(ActorConfig)},
        "population": config.population.to_dict(),
        "hyper_space": hyper_space,
        "seed": config.seed,
        "eval_seed": config.eval_seed,
        "output_dir": config.output_dir,
        "backlog_limit": config.backlog_limit,
    }


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=True)


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError("include", f"Config file {path} does not exist.")
    except yaml.YAMLError as e:
        raise ConfigError("config", f"Malformed YAML in {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError("config", f"{path} does not hold a mapping.")
    return dict(data)


def load_raw(path: PathLike, _stack: Optional[List[Path]] = None) -> Dict[str, Any]:
    """Read a config file with its includes merged, before profile defaults.

    Raises:
        ConfigError: On include cycles, missing files or malformed YAML.
    """
    path = Path(path).resolve()
    stack = _stack or []
    if path in stack:
        chain = " -> ".join(str(p) for p in stack + [path])
        raise ConfigError("include", f"Include cycle: {chain}")
    data = _read_yaml(path)
    includes = data.pop("include", []) or []
    if isinstance(includes, str):
        includes = [includes]
    merged: Dict[str, Any] = {}
    for include in includes:
        merged = deep_merge(
            merged, load_raw(path.parent / include, stack + [path])
        )
    return deep_merge(merged, data)


def load_config(path: PathLike, profile: Optional[str] = None) -> ExperimentConfig:
    return parse_config(load_raw(path), profile)


def save_config(config: ExperimentConfig, path: PathLike):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(config))
