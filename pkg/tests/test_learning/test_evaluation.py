import unittest

import numpy as np
import pytest

from rd2.assembly.environment import AssemblyEnv
from rd2.assembly.mounts import MOUNT_PRESETS, MountedSensorEnv
from rd2.assembly.offset_distribution import OffsetDistribution
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_spec import TaskSpec
from rd2.core.wrench import Wrench
from rd2.learning.evaluation import NetworkPolicy, evaluate_policy, transfer_rollout
from rd2.learning.network_params import NetworkParams
from rd2.learning.network_spec import NetworkRole, NetworkSpec
from tests.mocks.oracle_policy import OraclePolicy

SPEC = NetworkSpec(NetworkRole.ACTOR, hidden=4, recurrent_hidden=4)
CONTACT_TASK = TaskSpec.lap_joint(
    OffsetDistribution.fixed((0.003, 0, -0.0045)), max_steps=15
)


def reactive_policy(seed=0):
    rng = np.random.default_rng(seed)
    return NetworkPolicy(
        NetworkParams.from_flat(SPEC, rng.normal(0, 0.5, SPEC.param_count))
    )


class TestNetworkPolicy(unittest.TestCase):
    def test_reset_restores_initial_behaviour(self):
        policy = reactive_policy()
        observation = Wrench.from_array([1.0, -2.0, 3.0, 0.1, 0.2, -0.1])
        first = policy.act(observation)
        second = policy.act(observation)
        assert not np.array_equal(first, second)
        policy.reset()
        np.testing.assert_array_equal(policy.act(observation), first)


class TestEvaluatePolicy(unittest.TestCase):
    def test_oracle_always_succeeds(self):
        for offset in ((0, 0, 0), (0.003, -0.002, 0)):
            task = TaskSpec.lap_joint(OffsetDistribution.fixed(offset))
            env = AssemblyEnv(task, PhysicsParams())
            metrics = evaluate_policy(OraclePolicy(env), env, 3, seed=0)
            assert metrics.success_rate == 1.0
            assert metrics.mean_steps < task.max_steps
            assert metrics.mean_reward > 90

    def test_timeouts_score_negative_distance_sums(self):
        env = AssemblyEnv(CONTACT_TASK, PhysicsParams())
        metrics = evaluate_policy(reactive_policy(), env, 2, seed=5)
        assert metrics.success_rate == 0.0
        assert metrics.mean_steps == 15
        assert metrics.mean_reward < 0
        assert len(metrics.rewards) == 2
        assert metrics.to_dict()["episodes"] == 2

    def test_seeded_evaluation_is_reproducible(self):
        task = TaskSpec.lap_joint(OffsetDistribution(linear_jitter=0.001), max_steps=8)
        params = PhysicsParams(ft_noise_frac=0.1)
        first = evaluate_policy(reactive_policy(), AssemblyEnv(task, params), 3, 11)
        second = evaluate_policy(reactive_policy(), AssemblyEnv(task, params), 3, 11)
        assert first.rewards == second.rewards
        assert len(set(first.rewards)) == 3

    def test_needs_an_episode(self):
        env = AssemblyEnv(CONTACT_TASK, PhysicsParams())
        with pytest.raises(ValueError):
            evaluate_policy(reactive_policy(), env, 0)


class TestTransferRollout(unittest.TestCase):
    def setUp(self):
        self.params = PhysicsParams()
        self.reference = evaluate_policy(
            reactive_policy(), AssemblyEnv(CONTACT_TASK, self.params), 2, 0
        )

    def test_training_mount_matches_plain_evaluation(self):
        metrics = transfer_rollout(
            reactive_policy(), CONTACT_TASK, self.params, self.params.sensor_pose, 2, 0
        )
        np.testing.assert_allclose(metrics.rewards, self.reference.rewards, atol=1e-9)

    def test_corrected_mounts_reproduce_training_behaviour(self):
        for name in MOUNT_PRESETS:
            metrics = transfer_rollout(
                reactive_policy(), CONTACT_TASK, self.params, name, 2, 0
            )
            np.testing.assert_allclose(
                metrics.rewards, self.reference.rewards, atol=1e-6
            )

    def test_uncorrected_mount_changes_behaviour(self):
        metrics = transfer_rollout(
            reactive_policy(), CONTACT_TASK, self.params, "ur10", 2, 0, correct=False
        )
        difference = np.abs(np.array(metrics.rewards) - self.reference.rewards)
        assert difference.max() > 1e-6

    def test_oracle_succeeds_on_every_mount(self):
        task = TaskSpec.lap_joint(OffsetDistribution.fixed((0.002, 0.001, 0)))
        for name in MOUNT_PRESETS:
            env = MountedSensorEnv(task, self.params, name)
            metrics = evaluate_policy(OraclePolicy(env), env, 2, seed=0)
            assert metrics.success_rate == 1.0
