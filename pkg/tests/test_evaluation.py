"""Tests for beam metrics and the Monte-Carlo estimation oracle."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from isacbeam.array_model import steering_tx
from isacbeam.errors import InvalidInputError
from isacbeam.evaluation import (
    beampattern,
    mc_mse_oracle,
    power_split,
    secrecy_report,
    sensing_feasible,
    sinr_eve,
    sinr_user,
)


def _mrt(scenario):
    h = scenario.channels.user_channel
    return math.sqrt(scenario.channels.power_budget_w) * h / np.linalg.norm(h)


def _qbar_beam(scenario):
    ev, vecs = np.linalg.eigh(scenario.qbar.matrix)
    return math.sqrt(scenario.channels.power_budget_w) * vecs[:, -1]


class TestSinr:
    def test_user_mrt(self, paper_scenario):
        ch = paper_scenario.channels
        value = sinr_user(_mrt(paper_scenario), [], ch.user_channel, ch.noise_user_w)
        assert value == pytest.approx(0.1 * 8e-3 / 1e-9, rel=1e-10)

    def test_user_interference(self, paper_scenario):
        ch = paper_scenario.channels
        w = _mrt(paper_scenario)
        assert sinr_user(w, [w], ch.user_channel, ch.noise_user_w) < 1.0

    def test_eve_reference_scale(self, paper_scenario):
        sc = paper_scenario
        theta = sc.prior.angles_rad[0]
        w = 0.1 * steering_tx(theta, sc.array)
        expected = abs(np.vdot(steering_tx(theta, sc.array), w)) ** 2 / 1e-8
        assert sinr_eve(w, [], theta, sc.channels, sc.array) == pytest.approx(expected)

    def test_artificial_noise_lowers_eve_sinr(self, paper_scenario):
        sc = paper_scenario
        theta = sc.prior.angles_rad[1]
        w = _mrt(sc)
        v = 0.05 * steering_tx(theta, sc.array)
        assert sinr_eve(w, [v], theta, sc.channels, sc.array) < sinr_eve(
            w, [], theta, sc.channels, sc.array
        )


class TestSecrecyReport:
    def test_rates_clamped_and_worst_case(self, paper_scenario):
        report = secrecy_report(_mrt(paper_scenario), [], paper_scenario)
        assert len(report.rates) == len(report.sinr_eve) == 4
        assert all(r >= 0.0 for r in report.rates)
        assert report.worst_case_rate == min(report.rates)

    def test_rate_formula(self, paper_scenario):
        sc = paper_scenario
        w = 0.01 * _mrt(sc)
        report = secrecy_report(w, [], sc)
        for e, r in zip(report.sinr_eve, report.rates):
            assert r == pytest.approx(max(0.0, math.log2((1 + report.sinr_user) / (1 + e))))


class TestPowerAndSensing:
    def test_power_split(self):
        split = power_split(np.array([1.0, 1j]), [np.array([0.5, 0.0])])
        assert split.info_power == pytest.approx(2.0)
        assert split.an_power == pytest.approx(0.25)
        assert split.total == pytest.approx(2.25)

    def test_sensing_vacuous(self, paper_scenario):
        assert sensing_feasible(np.zeros(8), [], paper_scenario.with_threshold(1e-3))

    def test_sensing_needs_power(self, paper_scenario):
        assert not sensing_feasible(np.zeros(8), [], paper_scenario)
        assert sensing_feasible(_qbar_beam(paper_scenario), [], paper_scenario)


class TestBeampattern:
    def test_broadside(self, array_cfg):
        bp = beampattern(np.ones(8), [], [0.0], array_cfg)
        assert bp.info_power[0] == pytest.approx(64.0)
        assert bp.an_power[0] == 0.0

    def test_an_power_adds(self, array_cfg):
        v = np.zeros(8, dtype=complex)
        v[0] = 1.0
        bp = beampattern(np.zeros(8), [v, v], np.linspace(-1, 1, 7), array_cfg)
        np.testing.assert_allclose(bp.an_power, 2.0)
        np.testing.assert_allclose(bp.info_power, 0.0)

    def test_continuity_on_degree_grid(self, paper_scenario, rng):
        cfg = paper_scenario.array
        w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        theta = np.radians(np.arange(-90.0, 91.0))
        bp = beampattern(w, [], theta, cfg)
        bound = math.pi * cfg.spacing_ratio * (cfg.n_tx - 1) * cfg.n_tx * np.linalg.norm(w) ** 2
        assert np.max(np.abs(np.diff(bp.info_power))) <= 2 * bound * math.radians(1.0)


class TestMonteCarlo:
    def test_deterministic_and_thread_independent(self, paper_scenario):
        w = _qbar_beam(paper_scenario)
        beta = complex(paper_scenario.beta_min_abs)
        one = mc_mse_oracle(w, [], paper_scenario, beta, n_trials=20, n_snapshots=4, seed=11)
        two = mc_mse_oracle(
            w, [], paper_scenario, beta, n_trials=20, n_snapshots=4, seed=11, threads=3
        )
        np.testing.assert_array_equal(one.errors, two.errors)
        assert one.empirical_mse == two.empirical_mse
        assert one.ratio == pytest.approx(one.empirical_mse / one.pcrb_exact)

    def test_seed_changes_draws(self, paper_scenario):
        w = _qbar_beam(paper_scenario)
        beta = complex(paper_scenario.beta_min_abs)
        a = mc_mse_oracle(w, [], paper_scenario, beta, n_trials=10, n_snapshots=2, seed=1)
        b = mc_mse_oracle(w, [], paper_scenario, beta, n_trials=10, n_snapshots=2, seed=2)
        assert not np.array_equal(a.errors, b.errors)

    def test_warns_on_few_trials(self, paper_scenario, caplog):
        w = _qbar_beam(paper_scenario)
        with caplog.at_level(logging.WARNING, logger="isacbeam.evaluation"):
            mc_mse_oracle(w, [], paper_scenario, 1e-3, n_trials=5, n_snapshots=2, seed=0)
        assert any("MC trials" in r.message for r in caplog.records)

    def test_rejects_bad_counts(self, paper_scenario):
        with pytest.raises(InvalidInputError):
            mc_mse_oracle(np.ones(8), [], paper_scenario, 1e-3, n_trials=0, n_snapshots=1, seed=0)
