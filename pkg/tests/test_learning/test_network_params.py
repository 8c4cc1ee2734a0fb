import unittest

import numpy as np
import pytest

from rd2.core.exceptions import NonFiniteValueError, SpecMismatchError
from rd2.learning.network_params import HEAD_SCALE, NetworkParams, hard_update
from rd2.learning.network_spec import NetworkRole, NetworkSpec

SPEC = NetworkSpec(NetworkRole.ACTOR, hidden=4, recurrent_hidden=4)


class TestNetworkParams(unittest.TestCase):
    def test_arrays_are_read_only(self):
        params = NetworkParams.zeros(SPEC)
        with pytest.raises(ValueError):
            params["w_in"][0, 0] = 1.0

    def test_source_arrays_are_copied(self):
        source = {n: np.zeros(s) for n, s in SPEC.param_shapes.items()}
        params = NetworkParams(SPEC, source)
        source["b_in"][0] = 5.0
        assert params["b_in"][0] == 0

    def test_flat_round_trip(self):
        flat = np.arange(SPEC.param_count, dtype=float)
        params = NetworkParams.from_flat(SPEC, flat, version=3, synced_from=1)
        np.testing.assert_array_equal(params.flat(), flat)
        assert params.version == 3
        assert params.synced_from == 1
        assert params["w_in"][0, 1] == 1.0

    def test_from_flat_wrong_size(self):
        with pytest.raises(SpecMismatchError):
            NetworkParams.from_flat(SPEC, np.zeros(SPEC.param_count + 1))

    def test_missing_array(self):
        arrays = {n: np.zeros(s) for n, s in SPEC.param_shapes.items()}
        del arrays["w_h"]
        with pytest.raises(SpecMismatchError):
            NetworkParams(SPEC, arrays)

    def test_wrong_shape(self):
        arrays = {n: np.zeros(s) for n, s in SPEC.param_shapes.items()}
        arrays["b_out"] = np.zeros(5)
        with pytest.raises(SpecMismatchError):
            NetworkParams(SPEC, arrays)

    def test_non_finite(self):
        flat = np.zeros(SPEC.param_count)
        flat[3] = np.inf
        with pytest.raises(NonFiniteValueError):
            NetworkParams.from_flat(SPEC, flat)

    def test_initialize(self):
        params = NetworkParams.initialize(SPEC, np.random.default_rng(0))
        assert np.all(params["b_in"] == 0)
        assert np.max(np.abs(params["w_out"])) <= HEAD_SCALE / 2
        block = params["w_h"][:, :4]
        np.testing.assert_allclose(block.T @ block, np.eye(4), atol=1e-12)

    def test_initialize_is_seeded(self):
        a = NetworkParams.initialize(SPEC, np.random.default_rng(7))
        b = NetworkParams.initialize(SPEC, np.random.default_rng(7))
        assert a.max_abs_difference(b) == 0

    def test_with_arrays_bumps_version(self):
        params = NetworkParams.zeros(SPEC)
        updated = params.with_arrays({n: a + 1 for n, a in params.arrays.items()})
        assert updated.version == params.version + 1
        assert params.max_abs_difference(updated) == 1.0

    def test_hard_update(self):
        online = NetworkParams.from_flat(
            SPEC, np.ones(SPEC.param_count), version=12
        )
        target = NetworkParams.zeros(SPEC)
        synced = hard_update(target, online)
        assert synced.max_abs_difference(online) == 0
        assert synced.version == 1
        assert synced.synced_from == 12
        assert target.max_abs_difference(NetworkParams.zeros(SPEC)) == 0

    def test_hard_update_spec_mismatch(self):
        other = NetworkSpec(NetworkRole.ACTOR, hidden=4, recurrent_hidden=4,
                            recurrent=False)
        with pytest.raises(SpecMismatchError):
            hard_update(NetworkParams.zeros(other), NetworkParams.zeros(SPEC))
