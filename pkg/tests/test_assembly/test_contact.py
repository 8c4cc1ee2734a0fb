import math
import unittest

import numpy as np
import pytest

from rd2.assembly.contact import (
    contact_wrench,
    max_penetration,
    penalty_force,
    resolve_contacts,
)
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_spec import TaskSpec
from rd2.core.geom import pose_compose
from rd2.core.pose import Pose
from rd2.core.twist import Twist
from rd2.core.wrench import ZERO_WRENCH
from tests.helpers import assert_almost_equal

HALF_LENGTH = 0.06
TIP_CONTACT_POINTS = 25


class TestPenaltyForce(unittest.TestCase):
    def setUp(self):
        self.params = PhysicsParams(contact_stiffness=2000.0, contact_damping=20.0)

    def test_zero_iff_no_penetration(self):
        assert penalty_force(0.0, 0.0, self.params) == 0
        assert penalty_force(-0.001, 0.0, self.params) == 0
        assert penalty_force(-0.001, 1.0, self.params) == 0
        assert penalty_force(1e-9, 0.0, self.params) > 0

    def test_strictly_increasing_in_penetration(self):
        sweep = np.linspace(1e-6, 0.005, 100)
        forces = [penalty_force(p, 0.0, self.params) for p in sweep]
        assert all(b > a for a, b in zip(forces, forces[1:]))

    def test_stiffness_and_damping(self):
        assert penalty_force(0.001, 0.0, self.params) == pytest.approx(2.0)
        assert penalty_force(0.001, 0.01, self.params) == pytest.approx(2.2)

    def test_never_adhesive(self):
        assert penalty_force(0.001, -1.0, self.params) == 0


class TestContactWrench(unittest.TestCase):
    def setUp(self):
        self.task = TaskSpec.lap_joint()
        self.params = PhysicsParams()

    def pose_at(self, x, z_tip, y=0.0):
        return Pose.from_translation((x, y, z_tip + HALF_LENGTH))

    def test_contact_free_is_zero(self):
        assert contact_wrench(self.task.nominal_start, self.task, self.params) == (
            ZERO_WRENCH
        )
        assert max_penetration(self.task.nominal_start, self.task.geometry) == 0

    def test_inserted_with_clearance_is_contact_free(self):
        assert contact_wrench(self.task.goal_pose, self.task, self.params) == (
            ZERO_WRENCH
        )

    def test_pure_normal_penetration(self):
        depth = 0.001
        pose = self.pose_at(0.05, -depth)
        contacts = resolve_contacts(pose, self.task.geometry, self.params)
        assert contacts.points.shape[0] == TIP_CONTACT_POINTS
        magnitudes = np.linalg.norm(contacts.forces, axis=1)
        np.testing.assert_allclose(
            magnitudes, self.params.contact_stiffness * depth, rtol=1e-9
        )
        wrench = contact_wrench(pose, self.task, self.params)
        assert_almost_equal(
            wrench.force,
            [0, 0, TIP_CONTACT_POINTS * self.params.contact_stiffness * depth],
            epsilon=1e-9,
        )
        assert_almost_equal(wrench.torque, [0, 0, 0], epsilon=1e-9)

    def test_force_increases_with_penetration(self):
        forces = [
            contact_wrench(self.pose_at(0.05, -depth), self.task, self.params).force[2]
            for depth in np.linspace(0.0001, 0.002, 100)
        ]
        assert all(b > a for a, b in zip(forces, forces[1:]))

    def test_torque_matches_lever_arms(self):
        pose = self.pose_at(0.003, -0.0005, y=0.002)
        contacts = resolve_contacts(pose, self.task.geometry, self.params)
        assert not contacts.empty
        sensor_origin = pose_compose(pose, self.params.sensor_pose).translation
        expected_torque = contacts.torque_about(sensor_origin)
        wrench = contact_wrench(pose, self.task, self.params)
        assert_almost_equal(wrench.force, contacts.total_force(), epsilon=1e-12)
        assert_almost_equal(wrench.torque, expected_torque, epsilon=1e-12)
        assert np.linalg.norm(wrench.torque) > 0

    def test_chamfer_force_opposes_lateral_offset(self):
        wrench = contact_wrench(self.pose_at(0.003, -0.0005), self.task, self.params)
        assert wrench.force[0] < 0
        assert wrench.force[2] > 0
        wrench = contact_wrench(self.pose_at(-0.003, -0.0005), self.task, self.params)
        assert wrench.force[0] > 0

    def test_mirrored_offsets_give_mirrored_wrenches(self):
        for x, y, z_tip in [(0.003, 0.001, -0.0005), (0.0025, -0.004, -0.001)]:
            right = contact_wrench(self.pose_at(x, z_tip, y), self.task, self.params)
            left = contact_wrench(self.pose_at(-x, z_tip, y), self.task, self.params)
            mirror_force = np.array([-1, 1, 1])
            mirror_torque = np.array([1, -1, -1])
            assert_almost_equal(left.force, right.force * mirror_force, epsilon=1e-9)
            assert_almost_equal(
                left.torque, right.torque * mirror_torque, epsilon=1e-9
            )

    def test_friction_opposes_sliding(self):
        depth = 0.001
        pose = self.pose_at(0.05, -depth)
        velocity = Twist((0, 0.01, 0), (0, 0, 0))
        wrench = contact_wrench(pose, self.task, self.params, velocity)
        normal = TIP_CONTACT_POINTS * self.params.contact_stiffness * depth
        expected = -self.params.friction_coeff * normal * math.tanh(0.01 / 0.001)
        assert wrench.force[1] == pytest.approx(expected)
        assert wrench.force[2] == pytest.approx(normal)

    def test_friction_override(self):
        pose = self.pose_at(0.05, -0.001)
        velocity = Twist((0, 0.01, 0), (0, 0, 0))
        wrench = contact_wrench(pose, self.task, self.params, velocity, 0.0)
        assert wrench.force[1] == 0

    def test_damping_adds_to_approach(self):
        depth = 0.001
        pose = self.pose_at(0.05, -depth)
        velocity = Twist((0, 0, -0.01), (0, 0, 0))
        wrench = contact_wrench(pose, self.task, self.params, velocity)
        per_point = (
            self.params.contact_stiffness * depth + self.params.contact_damping * 0.01
        )
        assert wrench.force[2] == pytest.approx(TIP_CONTACT_POINTS * per_point)

    def test_relocated_socket_reports_same_wrench(self):
        pose = self.pose_at(0.003, -0.0005)
        socket = Pose.from_rotation_vector((0.4, -1.0, 0.2), (0.3, 0.1, -0.2))
        moved_task = TaskSpec.lap_joint(socket_pose=socket)
        original = contact_wrench(pose, self.task, self.params)
        moved = contact_wrench(pose_compose(socket, pose), moved_task, self.params)
        assert_almost_equal(original, moved, epsilon=1e-9)


class TestPegContact(unittest.TestCase):
    def test_peg_in_hole_floor(self):
        task = TaskSpec.peg_in_hole()
        params = PhysicsParams()
        depth = 0.0005
        # The peg is 60 mm long and the hole 30 mm deep
        pose = Pose.from_translation((0, 0, -depth))
        wrench = contact_wrench(pose, task, params)
        # 16 ring points on the tip level plus 9 face points
        assert wrench.force[2] == pytest.approx(25 * params.contact_stiffness * depth)
        assert_almost_equal(wrench.force[:2], [0, 0], epsilon=1e-9)
