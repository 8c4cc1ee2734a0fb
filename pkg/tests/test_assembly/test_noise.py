import unittest

import numpy as np
import pytest

from rd2.assembly.noise import NOISE_FLOOR, RunningRms, inject_noise, perturb_friction
from rd2.core.wrench import Wrench


class TestInjectNoise(unittest.TestCase):
    def test_zero_fraction_is_identity(self):
        wrench = Wrench((1, 2, 3), (0.1, 0.2, 0.3))
        assert inject_noise(wrench, 0.0, np.random.default_rng(0)) is wrench

    def test_negative_fraction_rejected(self):
        with pytest.raises(ValueError):
            inject_noise(Wrench.zero(), -0.1, np.random.default_rng(0))

    def test_standard_deviation_matches_fraction(self):
        rng = np.random.default_rng(1)
        unit_force = Wrench((1, 0, 0), (0, 0, 0))
        samples = np.array(
            [inject_noise(unit_force, 0.2, rng).as_array() for _ in range(100000)]
        )
        np.testing.assert_allclose(samples.mean(axis=0), [1, 0, 0, 0, 0, 0], atol=0.01)
        std = samples.std(axis=0)
        expected = 0.2 * NOISE_FLOOR
        assert np.all(np.abs(std - expected) <= 0.02 * expected)

    def test_custom_reference_scale(self):
        rng = np.random.default_rng(2)
        reference = np.array([10.0, 10.0, 10.0, 1.0, 1.0, 1.0])
        samples = np.array(
            [
                inject_noise(Wrench.zero(), 0.1, rng, reference).as_array()
                for _ in range(20000)
            ]
        )
        np.testing.assert_allclose(samples.std(axis=0), 0.1 * reference, rtol=0.05)

    def test_same_seed_same_noise(self):
        wrench = Wrench((1, 2, 3), (0, 0, 0))
        a = inject_noise(wrench, 0.2, np.random.default_rng(3))
        b = inject_noise(wrench, 0.2, np.random.default_rng(3))
        assert a == b


class TestPerturbFriction(unittest.TestCase):
    def test_zero_fraction(self):
        assert perturb_friction(0.3, 0.0, np.random.default_rng(0)) == 0.3

    def test_mean_is_preserved(self):
        rng = np.random.default_rng(4)
        samples = np.array([perturb_friction(0.3, 0.2, rng) for _ in range(100000)])
        assert np.all(samples >= 0)
        assert abs(samples.mean() - 0.3) <= 0.02 * 0.3

    def test_clamped_at_zero(self):
        rng = np.random.default_rng(5)
        samples = np.array([perturb_friction(0.3, 2.0, rng) for _ in range(1000)])
        assert samples.min() == 0
        assert np.any(samples > 0)


class TestRunningRms(unittest.TestCase):
    def test_empty_uses_floor(self):
        rms = RunningRms()
        np.testing.assert_array_equal(rms.rms, np.zeros(6))
        np.testing.assert_array_equal(rms.reference_scale(), NOISE_FLOOR)

    def test_rms_of_updates(self):
        rms = RunningRms().updated(Wrench((3, 0, 0), (0, 0, 0)))
        rms = rms.updated(Wrench((4, 0, 0), (0, 0, 0)))
        assert rms.count == 2
        assert rms.rms[0] == pytest.approx(np.sqrt(12.5))
        assert rms.reference_scale()[0] == pytest.approx(np.sqrt(12.5))
        assert rms.reference_scale()[1] == 1.0

    def test_updates_do_not_mutate(self):
        rms = RunningRms()
        rms.updated(Wrench((3, 0, 0), (0, 0, 0)))
        assert rms.count == 0
