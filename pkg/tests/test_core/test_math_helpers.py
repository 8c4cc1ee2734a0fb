import math
import unittest

import numpy as np
import pytest

from rd2.core.exceptions import NonFiniteValueError
from rd2.core.math_helpers import (
    as_vector,
    exp_rotation,
    gram_schmidt,
    log_rotation,
    orthonormality_residual,
    random_rotation,
    rotation_angle,
    skew,
)


class TestMathHelpers(unittest.TestCase):
    def test_as_vector(self):
        vector = as_vector([1, 2, 3], 3, "thing")
        assert vector.dtype == np.float64
        assert not vector.flags.writeable

    def test_as_vector_copies(self):
        source = np.array([1.0, 2.0, 3.0])
        vector = as_vector(source, 3, "thing")
        source[0] = 5
        assert vector[0] == 1

    def test_as_vector_wrong_size(self):
        with pytest.raises(ValueError):
            as_vector([1, 2], 3, "thing")

    def test_as_vector_non_finite(self):
        with pytest.raises(NonFiniteValueError):
            as_vector([1, float("nan"), 3], 3, "thing")
        with pytest.raises(NonFiniteValueError):
            as_vector([1, float("inf"), 3], 3, "thing")

    def test_skew_matches_cross_product(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.normal(size=3), rng.normal(size=3)
            np.testing.assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-15)

    def test_rotation_angle(self):
        assert rotation_angle(np.eye(3)) == 0
        assert rotation_angle(exp_rotation([math.pi / 3, 0, 0])) == pytest.approx(
            math.pi / 3
        )
        assert rotation_angle(exp_rotation([0, 0, math.pi])) == pytest.approx(math.pi)

    def test_rotation_angle_is_precise_near_zero(self):
        assert rotation_angle(exp_rotation([1e-9, 0, 0])) == pytest.approx(
            1e-9, rel=1e-6
        )

    def test_exp_log_are_inverse(self):
        rotation_vector = np.array([0.1, -0.2, 0.3])
        np.testing.assert_allclose(
            log_rotation(exp_rotation(rotation_vector)), rotation_vector, atol=1e-12
        )

    def test_gram_schmidt_repairs_drift(self):
        drifted = exp_rotation([0.3, 0.2, 0.1]) + 1e-6
        assert orthonormality_residual(drifted) > 1e-7
        repaired = gram_schmidt(drifted)
        assert orthonormality_residual(repaired) < 1e-12
        assert np.linalg.det(repaired) == pytest.approx(1.0)

    def test_random_rotation_is_deterministic_per_generator(self):
        a = random_rotation(np.random.default_rng(4))
        b = random_rotation(np.random.default_rng(4))
        np.testing.assert_array_equal(a, b)
        assert orthonormality_residual(a) < 1e-12
