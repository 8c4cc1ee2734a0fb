"""The ``rd2`` command line: train, eval, transfer-check and export-curves.

Exit codes are 0 on success, 2 on configuration errors and 3 on any other
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import yaml

from rd2.assembly.environment import AssemblyEnv
from rd2.assembly.mounts import MOUNT_PRESETS, resolve_mount
from rd2.assembly.offset_distribution import OffsetDistribution, difficulty_level
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_kind import TaskKind
from rd2.core import log
from rd2.core.exceptions import ConfigError, SpecMismatchError
from rd2.core.pose import Pose
from rd2.core.units import Radian, to_base_value
from rd2.interface.checkpoint import load_params
from rd2.interface.config_file import (
    ExperimentConfig,
    load_config,
    parse_config,
    save_config,
)
from rd2.interface.curves import export_curves
from rd2.interface.jsonl import JsonlWriter
from rd2.learning.evaluation import (
    EvaluationMetrics,
    NetworkPolicy,
    evaluate_policy,
    transfer_rollout,
)
from rd2.learning.trial import train_trial
from rd2.pbt.population import CHECKPOINTS_DIR, build_trial, run_population

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_FAILURE = 3

OFFSET_TABLE = ("none", "lin=3mm", "rot=5deg")
NOISE_TABLE = ("none", "ft=0.2", "friction=0.2")
DETERMINISTIC_FLOAT_FORMAT = "%.12g"


def _key_values(text: str, allowed: Sequence[str], field: str) -> Dict[str, str]:
    """Parse ``"a=1,b=2"`` option strings.

    >>> _key_values("lin=3mm,rot=5deg", ("lin", "rot"), "offset")
    {'lin': '3mm', 'rot': '5deg'}
    """
    if text in ("", "none"):
        return {}
    values = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in allowed:
            expected = "/".join(allowed)
            raise ConfigError(field, f"Expected {expected}=<value>, got '{item}'")
        values[key] = value.strip()
    return values


def parse_offset(text: str) -> OffsetDistribution:
    """``lin`` offsets every axis by the same length, ``rot`` rotates about Z."""
    values = _key_values(text, ("lin", "rot"), "offset")
    try:
        linear = to_base_value(values.get("lin", 0))
        angle = to_base_value(values.get("rot", 0), Radian)
    except ValueError as e:
        raise ConfigError("offset", str(e))
    return OffsetDistribution.fixed([linear] * 3, [0.0, 0.0, angle])


def apply_noise(physics: PhysicsParams, text: str) -> PhysicsParams:
    values = _key_values(text, ("ft", "friction"), "noise")
    try:
        return replace(
            physics,
            ft_noise_frac=float(values.get("ft", physics.ft_noise_frac)),
            friction_noise_frac=float(
                values.get("friction", physics.friction_noise_frac)
            ),
        )
    except ValueError as e:
        raise ConfigError("noise", str(e))


def parse_mount(text: str, training_sensor: Pose) -> Pose:
    """A sensor pose in the piece frame from a preset name or 12 floats.

    ``identity`` names the training sensor frame itself.
    """
    if text == "identity":
        return training_sensor
    if text in MOUNT_PRESETS:
        return resolve_mount(text)
    try:
        return Pose.from_flat([float(v) for v in text.split(",")])
    except ValueError as e:
        raise ConfigError("mount", f"Expected a preset name or 12 floats: {e}")


def _load_experiment(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        config = load_config(args.config, args.profile)
    else:
        task: Dict[str, object] = {"kind": getattr(args, "task", "lap-joint")}
        config = parse_config({"task": task}, args.profile)
    if getattr(args, "level", None) is not None:
        try:
            offset = difficulty_level(args.level)
        except ValueError as e:
            raise ConfigError("task.level", str(e))
        config = replace(config, task=replace(config.task, initial_offset=offset))
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.deterministic:
        config = config.with_deterministic()
    return config


def _record(label: str, metrics: EvaluationMetrics, **extra) -> dict:
    record = {"row": label}
    record.update(metrics.to_dict())
    record.update(extra)
    return record


def cmd_train(args) -> int:
    config = _load_experiment(args)
    if args.ablation in ("apex", "no-recurrence"):
        learner = replace(config.learner, recurrent=False)
        if args.ablation == "apex":
            learner = replace(learner, transition_priorities=False)
        config = replace(config, learner=learner)
    if args.run_dir:
        run_dir = Path(args.run_dir)
    else:
        run_dir = config.run_root / f"train-seed{config.seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, run_dir / "config.yaml")
    population = config.population
    if args.no_pbt:
        trial = build_trial(config, 0, run_dir)
        train_trial(
            trial,
            population.rounds,
            population.iterations_per_eval,
            population.eval_episodes,
            config.eval_seed,
            population.max_env_steps,
            run_dir / CHECKPOINTS_DIR / trial.trial_id,
        )
        best = {"trial_id": trial.trial_id, "hyperparams": trial.hyperparams}
    else:
        result = run_population(config, run_dir)
        best = result.best.to_dict()
    (run_dir / "best.yaml").write_text(yaml.safe_dump(best, sort_keys=True))
    logger.info("Training finished, results in %s", run_dir)
    return EXIT_OK


def _eval_setup(args) -> Tuple[ExperimentConfig, NetworkPolicy]:
    config = _load_experiment(args)
    params = load_params(args.checkpoint)
    if params.spec.limits != config.physics.limits:
        raise SpecMismatchError(
            f"Checkpoint limits {params.spec.limits} differ from "
            f"{config.physics.limits}"
        )
    return config, NetworkPolicy(params)


def _output(args, config: ExperimentConfig, name: str) -> JsonlWriter:
    path = Path(args.out) if args.out else config.run_root / f"{name}.jsonl"
    return JsonlWriter(path)


def cmd_eval(args) -> int:
    config, policy = _eval_setup(args)
    if args.table == "offsets":
        rows = [(label, label, "none") for label in OFFSET_TABLE]
    elif args.table == "noise":
        rows = [(label, "none", label) for label in NOISE_TABLE]
    else:
        rows = [(f"offset={args.offset},noise={args.noise}", args.offset, args.noise)]
    writer = _output(args, config, "eval")
    seed = config.eval_seed if args.seed is None else args.seed
    for label, offset, noise in rows:
        task = config.task
        if offset != "none" or args.table == "offsets":
            task = replace(task, initial_offset=parse_offset(offset))
        physics = apply_noise(config.physics, noise)
        metrics = evaluate_policy(
            policy, AssemblyEnv(task, physics), args.episodes, seed
        )
        writer.write(
            _record(label, metrics, command="eval", offset=offset, noise=noise)
        )
        logger.info("%s: success rate %.2f", label, metrics.success_rate)
    return EXIT_OK


def cmd_transfer_check(args) -> int:
    config, policy = _eval_setup(args)
    writer = _output(args, config, "transfer")
    seed = config.eval_seed if args.seed is None else args.seed
    physics = apply_noise(config.physics, args.noise)
    baseline = evaluate_policy(
        policy, AssemblyEnv(config.task, physics), args.episodes, seed
    )
    writer.write(_record("training-frame", baseline, command="transfer-check"))
    mounts: List[str] = list(MOUNT_PRESETS) if args.all_presets else [args.mount]
    for mount_text in mounts:
        mount = parse_mount(mount_text, config.physics.sensor_pose)
        corrections = [True] if args.no_negative_control else [True, False]
        for correct in corrections:
            metrics = transfer_rollout(
                policy, config.task, physics, mount, args.episodes, seed, correct
            )
            writer.write(
                _record(
                    mount_text,
                    metrics,
                    command="transfer-check",
                    corrected=correct,
                    mount_pose=mount.to_flat(),
                )
            )
            logger.info(
                "%s (%s): success rate %.2f vs %.2f in the training frame",
                mount_text,
                "corrected" if correct else "uncorrected",
                metrics.success_rate,
                baseline.success_rate,
            )
    return EXIT_OK


def cmd_export_curves(args) -> int:
    out = Path(args.out) if args.out else Path(args.run_dirs[0]) / "curves"
    float_format = DETERMINISTIC_FLOAT_FORMAT if args.deterministic else None
    export_curves(args.run_dirs, out, float_format)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML experiment config file")
    parser.add_argument(
        "--profile", choices=("desk", "full", "smoke"), help="Default profile"
    )
    parser.add_argument("--seed", type=int)
    parser.add_argument("--deterministic", action="store_true")
    parser.add_argument(
        "--task",
        default="lap-joint",
        choices=[k.config_name for k in TaskKind],
        help="Task used when no config file is given",
    )
    parser.add_argument("--level", type=int, help="Initial offset difficulty 0-4")


def _add_eval_common(parser: argparse.ArgumentParser):
    parser.add_argument("checkpoint", help="Parameter file or checkpoint directory")
    parser.add_argument("--episodes", type=int, default=10)
    parser.add_argument("--noise", default="none", help='e.g. "ft=0.2"')
    parser.add_argument("--out", help="Metrics JSONL path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rd2", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train a population or a single trial")
    _add_common(train)
    train.add_argument("--no-pbt", action="store_true", help="Train one trial")
    train.add_argument("--run-dir")
    train.add_argument(
        "--ablation",
        choices=("none", "no-recurrence", "apex"),
        default="none",
        help="apex disables both recurrence and transition priorities",
    )
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("eval", help="Evaluate a trained policy")
    _add_common(evaluate)
    _add_eval_common(evaluate)
    evaluate.add_argument("--offset", default="none", help='e.g. "lin=3mm,rot=5deg"')
    evaluate.add_argument("--table", choices=("offsets", "noise"))
    evaluate.set_defaults(handler=cmd_eval)

    transfer = commands.add_parser(
        "transfer-check", help="Evaluate with the sensor at another mount"
    )
    _add_common(transfer)
    _add_eval_common(transfer)
    transfer.add_argument(
        "--mount",
        "--mount-pose",
        default="identity",
        help=f"identity, one of {sorted(MOUNT_PRESETS)}, or 12 comma separated floats",
    )
    transfer.add_argument("--all-presets", action="store_true")
    transfer.add_argument(
        "--no-negative-control",
        action="store_true",
        help="Skip the uncorrected rollout",
    )
    transfer.set_defaults(handler=cmd_transfer_check)

    curves = commands.add_parser("export-curves", help="Write training curves as CSV")
    curves.add_argument("run_dirs", nargs="+")
    curves.add_argument("--out", help="Output directory")
    curves.add_argument(
        "--seed", type=int, help="Accepted for symmetry; curves involve no sampling"
    )
    curves.add_argument(
        "--deterministic",
        action="store_true",
        help="Write floats with a fixed number of significant digits",
    )
    curves.set_defaults(handler=cmd_export_curves)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    log.configure()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error("%s", e.message)
        return EXIT_CONFIG_ERROR
    except Exception:
        logger.exception("rd2 %s failed", args.command)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
