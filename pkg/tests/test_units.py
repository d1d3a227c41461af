"""Tests for unit conversions."""

from __future__ import annotations

import numpy as np
import pytest

from isacbeam.units import DBM_FLOOR, db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm


class TestDecibels:
    def test_db_to_linear(self):
        assert db_to_linear(10.0) == pytest.approx(10.0)
        assert db_to_linear(-30.0) == pytest.approx(1e-3)

    def test_linear_to_db_inverts(self):
        x = np.array([1e-9, 0.5, 3.0])
        np.testing.assert_allclose(db_to_linear(linear_to_db(x)), x, rtol=1e-12)


class TestDbm:
    def test_power_budget(self):
        assert dbm_to_watts(20.0) == pytest.approx(0.1, rel=1e-12)

    def test_noise_floor(self):
        assert dbm_to_watts(-60.0) == pytest.approx(1e-9, rel=1e-12)

    def test_watts_to_dbm(self):
        assert watts_to_dbm(0.1) == pytest.approx(20.0)
        assert watts_to_dbm(1e-3) == pytest.approx(0.0, abs=1e-12)

    def test_zero_power_is_floored(self):
        out = watts_to_dbm(np.array([0.0, -1.0, 1e-40]))
        assert out[0] == DBM_FLOOR
        assert out[1] == DBM_FLOOR
        assert out[2] == DBM_FLOOR
        assert np.all(np.isfinite(out))
