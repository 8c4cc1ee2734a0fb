import math
import unittest

import numpy as np
import pytest

from rd2.assembly.socket_geometry import (
    CONTACT_SKIN,
    SAMPLE_LEVELS,
    SocketGeometry,
)
from rd2.assembly.task_kind import TaskKind


class TestLapJointSocket(unittest.TestCase):
    def setUp(self):
        self.geometry = SocketGeometry.for_task(TaskKind.LAP_JOINT, 0.002)

    def distance(self, point):
        distance, normal = self.geometry.signed_distance(np.array([point]))
        return float(distance[0]), normal[0]

    def test_dimensions(self):
        assert self.geometry.opening_half_width == pytest.approx(0.016)
        assert self.geometry.piece_half_width == 0.015
        assert self.geometry.piece_half_length == 0.06

    def test_opening_is_free(self):
        distance, _ = self.distance((0.0, 0.0, -0.01))
        assert distance > 0

    def test_above_surface_is_free(self):
        distance, _ = self.distance((0.05, 0.0, 0.001))
        assert distance > 0

    def test_top_surface(self):
        distance, normal = self.distance((0.05, 0.3, -0.001))
        assert distance == pytest.approx(-0.001)
        np.testing.assert_allclose(normal, [0, 0, 1])

    def test_slot_walls(self):
        distance, normal = self.distance((0.0165, 0.0, -0.01))
        assert distance == pytest.approx(-0.0005)
        np.testing.assert_allclose(normal, [-1, 0, 0])
        distance, normal = self.distance((-0.0165, 0.0, -0.01))
        assert distance == pytest.approx(-0.0005)
        np.testing.assert_allclose(normal, [1, 0, 0])

    def test_chamfer(self):
        distance, normal = self.distance((0.0175, 0.0, -0.001))
        assert distance == pytest.approx(-0.0005 / math.sqrt(2))
        np.testing.assert_allclose(normal, [-1 / math.sqrt(2), 0, 1 / math.sqrt(2)])
        distance, _ = self.distance((0.0175, 0.0, -0.0002))
        assert distance > 0

    def test_floor(self):
        distance, normal = self.distance((0.0, 0.0, -0.031))
        assert distance == pytest.approx(-0.001)
        np.testing.assert_allclose(normal, [0, 0, 1])

    def test_slot_is_open_along_y(self):
        a, _ = self.distance((0.0165, 0.0, -0.01))
        b, _ = self.distance((0.0165, 5.0, -0.01))
        assert a == b

    def test_piece_samples(self):
        samples = self.geometry.piece_samples
        assert samples.shape == (SAMPLE_LEVELS * 16 + 9, 3)
        assert np.all(np.abs(samples[:, :2]) <= 0.015)
        assert samples[:, 2].min() == -0.06
        assert not samples.flags.writeable

    def test_piece_samples_are_mirror_symmetric(self):
        samples = self.geometry.piece_samples
        mirrored = samples * [-1, 1, 1]
        as_set = {tuple(np.round(p, 12)) for p in samples}
        assert as_set == {tuple(np.round(p, 12)) for p in mirrored}


class TestPegSocket(unittest.TestCase):
    def setUp(self):
        self.geometry = SocketGeometry.for_task(TaskKind.PEG_IN_HOLE, 0.0)

    def test_zero_clearance_hole_gets_skin(self):
        assert self.geometry.opening_half_width == pytest.approx(0.010 + CONTACT_SKIN)

    def test_rotational_symmetry(self):
        angles = np.linspace(0, 2 * np.pi, 7)
        points = np.stack(
            (0.0105 * np.cos(angles), 0.0105 * np.sin(angles), np.full(7, -0.01)),
            axis=1,
        )
        distance, normals = self.geometry.signed_distance(points)
        np.testing.assert_allclose(distance, distance[0], atol=1e-15)
        np.testing.assert_allclose(
            normals[:, :2], -points[:, :2] / 0.0105, atol=1e-12
        )

    def test_axis_point(self):
        distance, normal = self.geometry.signed_distance(np.zeros((1, 3)))
        assert distance[0] > 0
        assert np.all(np.isfinite(normal))

    def test_piece_samples_lie_on_peg(self):
        samples = self.geometry.piece_samples
        assert samples.shape == (SAMPLE_LEVELS * 16 + 9, 3)
        assert np.all(np.hypot(samples[:, 0], samples[:, 1]) <= 0.010 + 1e-15)
