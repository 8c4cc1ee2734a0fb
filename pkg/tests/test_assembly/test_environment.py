import math
import unittest

import numpy as np
import pytest

from rd2.assembly import environment
from rd2.assembly.contact import contact_wrench, max_penetration
from rd2.assembly.environment import AssemblyEnv, reward_for_distance
from rd2.assembly.offset_distribution import OffsetDistribution, difficulty_level
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_kind import ActionFrame, DoneReason, TaskKind
from rd2.assembly.task_spec import TaskSpec
from rd2.core.exceptions import (
    ConfigError,
    DeepPenetrationError,
    EpisodeDoneError,
    NonFiniteValueError,
)
from rd2.core.geom import pose_compose, pose_distance, pose_inverse
from rd2.core.pose import Pose
from rd2.core.twist import Twist
from rd2.core.wrench import ZERO_WRENCH, Wrench
from tests.helpers import assert_almost_equal, random_pose

DOWN = [0, 0, -0.01, 0, 0, 0]
STILL = [0, 0, 0, 0, 0, 0]


def offset_task(linear, **kwargs) -> TaskSpec:
    return TaskSpec.lap_joint(OffsetDistribution.fixed(linear), **kwargs)


class TestTaskSpec(unittest.TestCase):
    def test_standard_tasks(self):
        lap = TaskSpec.lap_joint()
        assert lap.clearance == 0.002
        assert lap.success_epsilon == 0.001
        assert lap.success_bonus == 100
        assert lap.max_steps == 200
        peg = TaskSpec.peg_in_hole()
        assert peg.clearance == 0

    def test_start_is_25mm_from_goal(self):
        for task in (TaskSpec.lap_joint(), TaskSpec.peg_in_hole()):
            assert pose_distance(task.nominal_start, task.goal_pose) == pytest.approx(
                0.025
            )

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            TaskSpec.lap_joint(clearance=-0.001)
        with pytest.raises(ConfigError):
            TaskSpec.lap_joint(success_epsilon=0)
        with pytest.raises(ConfigError) as error:
            TaskSpec.lap_joint(max_steps=0)
        assert error.value.field == "task.max_steps"

    def test_difficulty_levels(self):
        task = TaskSpec.standard(TaskKind.PEG_IN_HOLE, level=3)
        np.testing.assert_allclose(task.initial_offset.linear, [0.003] * 3)
        assert difficulty_level(4).angular[0] == pytest.approx(math.radians(5))
        with pytest.raises(ValueError):
            difficulty_level(5)


class TestPhysicsParams(unittest.TestCase):
    def test_invalid_values(self):
        with pytest.raises(ConfigError) as error:
            PhysicsParams(contact_stiffness=0)
        assert error.value.field == "physics.contact_stiffness"
        with pytest.raises(ConfigError):
            PhysicsParams(friction_coeff=-0.1)
        with pytest.raises(ConfigError):
            PhysicsParams(dt=0)
        with pytest.raises(ConfigError):
            PhysicsParams(ft_noise_frac=-1)


class TestReset(unittest.TestCase):
    def setUp(self):
        self.params = PhysicsParams()

    def test_zero_offset_is_contact_free(self):
        for task in (TaskSpec.lap_joint(), TaskSpec.peg_in_hole()):
            state, observation = environment.reset(task, self.params, 0)
            assert observation == ZERO_WRENCH
            assert state.piece_pose == task.start_pose(Pose.identity())
            assert state.step_count == 0
            assert not state.done

    def test_same_seed_is_deterministic(self):
        jittered = OffsetDistribution(
            np.array([0.003, 0, -0.0055]), np.zeros(3), 0.0005, 0.01
        )
        task = TaskSpec.lap_joint(jittered)
        params = PhysicsParams(ft_noise_frac=0.2, friction_noise_frac=0.2)
        state_a, obs_a = environment.reset(task, params, 7)
        state_b, obs_b = environment.reset(task, params, 7)
        assert state_a.piece_pose == state_b.piece_pose
        assert state_a.friction_coeff == state_b.friction_coeff
        assert obs_a == obs_b
        _, step_a = environment.step(state_a, DOWN, task, params)
        _, step_b = environment.step(state_b, DOWN, task, params)
        assert step_a == step_b

    def test_different_seeds_differ(self):
        task = TaskSpec.lap_joint(OffsetDistribution(linear_jitter=0.001))
        state_a, _ = environment.reset(task, self.params, 1)
        state_b, _ = environment.reset(task, self.params, 2)
        assert state_a.piece_pose != state_b.piece_pose

    def test_lateral_offset_on_chamfer_pushes_back(self):
        task = offset_task((0.003, 0, -0.0055))
        _, observation = environment.reset(task, self.params, 0)
        assert observation.force[0] < 0

    def test_deep_penetration_rejected(self):
        task = offset_task((0.05, 0, -0.02))
        with pytest.raises(DeepPenetrationError) as error:
            environment.reset(task, self.params, 0)
        assert isinstance(error.value, ConfigError)
        assert error.value.field == "task.initial_offset"


class TestStep(unittest.TestCase):
    def setUp(self):
        self.params = PhysicsParams()

    def test_zero_action_in_free_space(self):
        task = TaskSpec.lap_joint(max_steps=3)
        state, _ = environment.reset(task, self.params, 0)
        start = state.piece_pose
        expected_distance = pose_distance(start, task.world_goal)
        for step in range(3):
            state, result = environment.step(state, STILL, task, self.params)
            assert state.piece_pose == start
            assert result.reward == -expected_distance
            assert result.observation == ZERO_WRENCH
            assert result.done == (step == 2)
        assert result.done_reason == DoneReason.TIMEOUT

    def test_free_space_descent_is_exact(self):
        task = offset_task((0, 0, 0.05))
        state, _ = environment.reset(task, self.params, 0)
        z_start = state.piece_pose.translation[2]
        for _ in range(10):
            state, result = environment.step(state, DOWN, task, self.params)
            assert result.motion_scale == 1.0
        assert z_start - state.piece_pose.translation[2] == pytest.approx(
            0.005, abs=1e-12
        )
        assert state.step_count == 10

    def test_success(self):
        task = offset_task((0, 0, -0.0241))
        state, _ = environment.reset(task, self.params, 0)
        state, result = environment.step(state, DOWN, task, self.params)
        assert result.done
        assert result.done_reason == DoneReason.SUCCESS
        assert result.info_distance == pytest.approx(0.0004, abs=1e-12)
        assert result.reward == pytest.approx(99.9996, abs=1e-9)
        assert result.reward >= task.success_bonus - task.success_epsilon
        assert state.done

    def test_stepping_done_state_fails(self):
        task = TaskSpec.lap_joint(max_steps=1)
        state, _ = environment.reset(task, self.params, 0)
        state, _ = environment.step(state, STILL, task, self.params)
        with pytest.raises(EpisodeDoneError):
            environment.step(state, STILL, task, self.params)

    def test_non_finite_action_fails(self):
        task = TaskSpec.lap_joint()
        state, _ = environment.reset(task, self.params, 0)
        with pytest.raises(NonFiniteValueError):
            environment.step(state, [0, float("nan"), 0, 0, 0, 0], task, self.params)

    def test_clamping_is_recorded(self):
        task = offset_task((0, 0, 0.05))
        state, _ = environment.reset(task, self.params, 0)
        x_start = state.piece_pose.translation[0]
        state, result = environment.step(state, [1, 0, 0, 0, 0, 0], task, self.params)
        assert result.action_clamped
        assert state.piece_pose.translation[0] - x_start == pytest.approx(0.001)
        _, result = environment.step(state, STILL, task, self.params)
        assert not result.action_clamped

    def test_rotation_integration(self):
        task = offset_task((0, 0, 0.05))
        state, _ = environment.reset(task, self.params, 0)
        state, _ = environment.step(state, [0, 0, 0, 0, 0, 0.1], task, self.params)
        expected = Pose.from_rotation_vector((0, 0, 0.005))
        np.testing.assert_allclose(
            state.piece_pose.rotation, expected.rotation, atol=1e-15
        )

    def test_penetration_is_limited(self):
        task = offset_task((0.05, 0, -0.004))
        state, _ = environment.reset(task, self.params, 0)
        scales = []
        for _ in range(8):
            state, result = environment.step(
                state, [0, 0, -0.02, 0, 0, 0], task, self.params
            )
            scales.append(result.motion_scale)
            assert max_penetration(state.piece_pose, task.geometry) <= 0.002 + 1e-12
        assert min(scales) < 1
        assert max_penetration(state.piece_pose, task.geometry) > 0.002 - 2e-5

    def test_observation_is_exactly_the_contact_wrench(self):
        task = offset_task((0.003, 0, -0.0045))
        state, _ = environment.reset(task, self.params, 0)
        for action in ([0.001, 0.002, -0.01, 0, 0, 0.01], DOWN, DOWN):
            state, result = environment.step(state, action, task, self.params)
            assert isinstance(result.observation, Wrench)
            assert result.observation.as_array().shape == (6,)
            expected = contact_wrench(
                state.piece_pose,
                task,
                self.params,
                Twist.from_array(action) * result.motion_scale,
                state.friction_coeff,
            )
            assert result.observation == expected

    def test_reward_is_lipschitz_outside_success_ball(self):
        task = TaskSpec.lap_joint()
        rng = np.random.default_rng(3)
        goal = task.world_goal
        for _ in range(500):
            x1 = pose_compose(goal, random_pose(rng, 0.02))
            x2 = pose_compose(goal, random_pose(rng, 0.02))
            d1 = pose_distance(x1, goal)
            d2 = pose_distance(x2, goal)
            if min(d1, d2) <= task.success_epsilon:
                continue
            r1 = reward_for_distance(d1, task)
            r2 = reward_for_distance(d2, task)
            assert abs(r1 - r2) <= pose_distance(x1, x2) + 1e-12

    def test_socket_frame_actions_transfer_to_relocated_sockets(self):
        socket = Pose.from_rotation_vector((math.pi / 2, 0, 0), (0.4, -0.2, 0.3))
        offset = OffsetDistribution.fixed((0.003, 0.001, -0.0045))
        home = TaskSpec.lap_joint(offset)
        moved = TaskSpec.lap_joint(
            offset, socket_pose=socket, action_frame=ActionFrame.SOCKET
        )
        home_state, home_obs = environment.reset(home, self.params, 0)
        moved_state, moved_obs = environment.reset(moved, self.params, 0)
        assert_almost_equal(home_obs, moved_obs, epsilon=1e-9)
        for _ in range(5):
            home_state, home_result = environment.step(
                home_state, DOWN, home, self.params
            )
            moved_state, moved_result = environment.step(
                moved_state, DOWN, moved, self.params
            )
            assert_almost_equal(
                home_result.observation, moved_result.observation, epsilon=1e-9
            )
            assert moved_result.reward == pytest.approx(home_result.reward, abs=1e-9)
        local = pose_compose(pose_inverse(socket), moved_state.piece_pose)
        assert_almost_equal(local, home_state.piece_pose, epsilon=1e-9)


class TestAssemblyEnv(unittest.TestCase):
    def test_requires_reset(self):
        env = AssemblyEnv(TaskSpec.lap_joint(), PhysicsParams())
        with pytest.raises(RuntimeError):
            env.step(STILL)

    def test_records_trace(self):
        records = []
        task = TaskSpec.lap_joint(max_steps=2)
        env = AssemblyEnv(task, PhysicsParams(), records.append)
        env.reset(0)
        env.step(DOWN)
        result = env.step(DOWN)
        assert result.done
        assert [r.t for r in records] == [1, 2]
        assert records[-1].done
        assert records[0].action == Twist.from_array(DOWN)
        assert env.observation_size == env.action_size == 6
