import math
import unittest

import numpy as np
import pytest

from rd2.core.exceptions import InvalidPoseError, NonFiniteValueError
from rd2.core.math_helpers import skew
from rd2.core.pose import IDENTITY, Pose
from tests.helpers import random_pose


class TestPose(unittest.TestCase):
    def test_identity(self):
        np.testing.assert_array_equal(IDENTITY.rotation, np.eye(3))
        np.testing.assert_array_equal(IDENTITY.translation, np.zeros(3))
        assert Pose.identity() == IDENTITY

    def test_arrays_are_read_only(self):
        pose = Pose.from_translation((1, 2, 3))
        with pytest.raises(ValueError):
            pose.translation[0] = 5

    def test_rejects_non_orthonormal(self):
        with pytest.raises(InvalidPoseError):
            Pose(np.eye(3) * 1.001, (0, 0, 0))

    def test_rejects_reflection(self):
        with pytest.raises(InvalidPoseError):
            Pose(np.diag([1.0, 1.0, -1.0]), (0, 0, 0))

    def test_accepts_tiny_residual(self):
        rotation = np.eye(3)
        rotation[0, 0] += 1e-10
        Pose(rotation, (0, 0, 0))

    def test_rejects_non_finite_translation(self):
        with pytest.raises(NonFiniteValueError):
            Pose.from_translation((0, float("nan"), 0))

    def test_rejects_wrong_shapes(self):
        with pytest.raises(ValueError):
            Pose(np.eye(2), (0, 0, 0))
        with pytest.raises(ValueError):
            Pose.from_translation((0, 0))

    def test_from_rotation_vector(self):
        pose = Pose.from_rotation_vector((0, 0, math.pi / 2), (1, 0, 0))
        np.testing.assert_allclose(pose.rotation @ [1, 0, 0], [0, 1, 0], atol=1e-15)
        np.testing.assert_array_equal(pose.translation, [1, 0, 0])

    def test_flat_form(self):
        pose = Pose.from_rotation_vector((0.1, 0.2, 0.3), (1, 2, 3))
        flat = pose.to_flat()
        assert len(flat) == 12
        assert flat[9:] == [1.0, 2.0, 3.0]
        assert flat[:9] == pose.rotation.reshape(-1).tolist()
        assert Pose.from_flat(flat) == pose

    def test_from_flat_wrong_size(self):
        with pytest.raises(ValueError):
            Pose.from_flat([0] * 11)

    def test_from_def(self):
        pose = Pose.from_translation((1, 2, 3))
        assert Pose.from_def(pose) is pose
        assert Pose.from_def(pose.to_flat()) == pose

    def test_force_torque_twist_matrix(self):
        pose = random_pose(np.random.default_rng(1))
        matrix = pose.force_torque_twist_matrix
        np.testing.assert_array_equal(matrix[:3, :3], pose.rotation)
        np.testing.assert_array_equal(matrix[:3, 3:], np.zeros((3, 3)))
        np.testing.assert_allclose(
            matrix[3:, :3], skew(pose.translation) @ pose.rotation
        )
        np.testing.assert_array_equal(matrix[3:, 3:], pose.rotation)
        assert pose.force_torque_twist_matrix is matrix

    def test__eq__and__hash__(self):
        a = Pose.from_translation((1, 2, 3))
        b = Pose.from_translation((1, 2, 3))
        c = Pose.from_translation((1, 2, 4))
        assert a == b
        assert hash(a) == hash(b)
        assert a != c
        assert a != a.to_flat()
