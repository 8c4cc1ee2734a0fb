"""Desk-scale learning runs, enabled by setting ``RD2_RUN_SLOW``.

Each run trains one trial with two actors and no population based training for
up to 300k environment steps, which takes most of an hour on a laptop.
"""

import unittest
import warnings
from dataclasses import replace
from typing import Dict, Tuple

import pytest

from rd2.assembly.environment import AssemblyEnv
from rd2.assembly.mounts import MOUNT_PRESETS
from rd2.core import env
from rd2.interface.config_file import ExperimentConfig, parse_config
from rd2.learning.evaluation import (
    EvaluationMetrics,
    NetworkPolicy,
    evaluate_policy,
    transfer_rollout,
)
from rd2.learning.trial import train_trial
from rd2.pbt.population import build_trial

SEEDS = (0, 1, 2)
MAX_ENV_STEPS = 300_000
EVAL_EPISODES = 20
EVAL_SEED = 50_000

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(not env.run_slow_tests(), reason="RD2_RUN_SLOW is not set"),
]

_trained: Dict[Tuple[float, bool, int], NetworkPolicy] = {}


def desk_config(offset: float, seed: int, recurrent: bool = True) -> ExperimentConfig:
    config = parse_config(
        {
            "task": {
                "kind": "lap-joint",
                "clearance": "2mm",
                "initial_offset": {"linear": [offset, 0, 0]},
            },
            "population": {"num_trials": 1, "rounds": 1000, "exploit": False},
            "seed": seed,
        },
        "desk",
    )
    return replace(config, learner=replace(config.learner, recurrent=recurrent))


def trained_policy(offset: float, seed: int, recurrent: bool = True) -> NetworkPolicy:
    key = (offset, recurrent, seed)
    if key not in _trained:
        config = desk_config(offset, seed, recurrent)
        trial = build_trial(config, 0, None)
        train_trial(
            trial,
            config.population.rounds,
            config.population.iterations_per_eval,
            config.population.eval_episodes,
            EVAL_SEED,
            MAX_ENV_STEPS,
        )
        _trained[key] = NetworkPolicy(trial.learner.networks.actor)
    return _trained[key]


def evaluate(policy, offset: float, seed: int, **physics) -> EvaluationMetrics:
    config = desk_config(offset, seed)
    return evaluate_policy(
        policy,
        AssemblyEnv(config.task, replace(config.physics, **physics)),
        EVAL_EPISODES,
        EVAL_SEED,
    )


class TestLearning(unittest.TestCase):
    def test_zero_offset(self):
        rates = [evaluate(trained_policy(0.0, s), 0.0, s).success_rate for s in SEEDS]
        assert sum(rate >= 0.9 for rate in rates) >= 2, rates

    def test_three_millimeter_offset(self):
        rates = [
            evaluate(trained_policy(0.003, s), 0.003, s).success_rate for s in SEEDS
        ]
        assert sum(rate >= 0.7 for rate in rates) >= 2, rates

    def test_corrected_mounts_keep_success_rate(self):
        seed = SEEDS[0]
        config = desk_config(0.0, seed)
        policy = trained_policy(0.0, seed)
        baseline = evaluate(policy, 0.0, seed).success_rate
        for name in MOUNT_PRESETS:
            args = (policy, config.task, config.physics, name, EVAL_EPISODES)
            corrected = transfer_rollout(*args, EVAL_SEED, correct=True)
            uncorrected = transfer_rollout(*args, EVAL_SEED, correct=False)
            assert corrected.success_rate == baseline, name
            if baseline > 0:
                assert uncorrected.success_rate < baseline, name

    def test_noise_robustness(self):
        seed = SEEDS[0]
        policy = trained_policy(0.0, seed)
        baseline = evaluate(policy, 0.0, seed).success_rate
        ft_noise = evaluate(policy, 0.0, seed, ft_noise_frac=0.2).success_rate
        friction_noise = evaluate(
            policy, 0.0, seed, friction_noise_frac=0.2
        ).success_rate
        assert baseline - ft_noise <= 0.2
        assert baseline - friction_noise <= 0.1

    def test_recurrence_helps(self):
        with_memory = [
            evaluate(trained_policy(0.003, s), 0.003, s).success_rate for s in SEEDS
        ]
        without = [
            evaluate(trained_policy(0.003, s, False), 0.003, s).success_rate
            for s in SEEDS
        ]
        if sum(without) > sum(with_memory):
            warnings.warn(
                f"Recurrence-off trials scored {without}, recurrent ones {with_memory}"
            )
