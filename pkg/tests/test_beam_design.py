"""Tests for the inner SDP, rank-one recovery, the gamma search and the benchmarks."""

from __future__ import annotations

import dataclasses
import math
from unittest.mock import patch

import numpy as np
import pytest

from isacbeam import beam_design, sdp_solver
from isacbeam.beam_design import (
    GammaPoint,
    GammaSearchConfig,
    assemble_inner,
    benchmark_mrt,
    benchmark_no_an,
    extract_beams,
    feasibility_probe,
    reconstruct_rank_one,
    search_gamma,
    solve_inner,
    sweep_gamma,
)
from isacbeam.errors import CertificateError, InfeasibleScenarioError, InvalidInputError
from isacbeam.evaluation import beampattern, kkt_report, mc_mse_oracle, secrecy_report
from isacbeam.pcrb import pcrb_exact

GAMMA = 100.0


def _row_values(problem, blocks, scalars):
    out = []
    for con in problem.constraints:
        lhs = sum(
            float(np.real(np.trace(problem.block_coefficient(con, j) @ b)))
            for j, b in enumerate(blocks)
        )
        out.append(lhs + float(problem.scalar_coefficients(con) @ scalars))
    return np.array(out)


def _single_sign_change(values, tol=1e-9):
    diffs = [d for d in np.diff(values) if abs(d) > tol]
    signs = [d > 0 for d in diffs]
    changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    return changes <= 1


@pytest.fixture
def inner(paper_scenario):
    """Provide an optimal inner solve of the reference scenario."""
    return solve_inner(GAMMA, paper_scenario)


class TestGammaSearchConfig:
    def test_defaults(self):
        cfg = GammaSearchConfig()
        assert (cfg.gamma_min, cfg.gamma_max, cfg.grid_points) == (1e-4, None, 64)
        assert cfg.refine_iterations == 20

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma_min": 0.0},
            {"gamma_max": 1e-5},
            {"grid_points": 1},
            {"threads": 0},
            {"refine_iterations": -1},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(InvalidInputError):
            GammaSearchConfig(**kwargs)

    def test_grid_uses_eavesdropper_bound(self, paper_scenario):
        grid = beam_design._gamma_grid(paper_scenario, GammaSearchConfig())
        assert grid[0] == pytest.approx(1e-4)
        assert grid[-1] == pytest.approx(8e7)
        assert grid.size == 64

    def test_grid_floor(self, paper_scenario):
        grid = beam_design._gamma_grid(paper_scenario, GammaSearchConfig(gamma_min=1e9))
        assert grid[-1] == pytest.approx(1e10)


class TestAssembleInner:
    def test_structure(self, paper_scenario):
        p = assemble_inner(GAMMA, paper_scenario)
        assert p.psd_blocks == [8, 8]
        assert p.scalar_count == 1
        assert [c.sense for c in p.constraints] == ["LE"] * 4 + ["EQ", "LE", "GE"]
        assert [c.name for c in p.constraints][4:] == ["normalization", "power", "sensing"]
        assert p.validate() == []

    def test_without_artificial_noise(self, paper_scenario):
        p = assemble_inner(GAMMA, paper_scenario, include_an=False)
        assert p.psd_blocks == [8]
        assert p.validate() == []

    def test_normalized_rows_are_rescaled_original_rows(self, paper_scenario, make_psd):
        sc = paper_scenario
        ch = sc.channels
        w, v, t = 1e-3 * make_psd(8), 1e-3 * make_psd(8), 3.0
        orig = _row_values(assemble_inner(GAMMA, sc), [w, v], np.array([t]))
        scale = ch.noise_user_w / ch.power_budget_w
        norm = _row_values(
            assemble_inner(GAMMA, sc, normalized=True),
            [scale * w, scale * v],
            np.array([t * ch.noise_user_w]),
        )
        expected = orig * scale
        expected[4] = orig[4]
        np.testing.assert_allclose(norm, expected, rtol=1e-10)

    def test_rejects_nonpositive_gamma(self, paper_scenario):
        with pytest.raises(InvalidInputError):
            assemble_inner(0.0, paper_scenario)


class TestSolveInner:
    def test_optimal_and_feasible(self, inner, paper_scenario):
        sc = paper_scenario
        ch = sc.channels
        assert inner.optimal
        assert inner.t > 0
        for mat in (inner.W, inner.V):
            assert np.linalg.eigvalsh(mat)[0] > -1e-9 * np.abs(mat).max()
        norm = np.real(np.trace(sc.h_matrix @ inner.V)) + ch.noise_user_w * inner.t
        scale = np.linalg.norm(sc.h_matrix) * np.linalg.norm(inner.V)
        scale += ch.noise_user_w * inner.t
        assert abs(norm - 1.0) <= 1e-7 * (scale + 1.0)
        total = np.real(np.trace(inner.W + inner.V))
        assert total <= ch.power_budget_w * inner.t * (1 + 1e-6)
        sensed = np.real(np.trace(sc.qbar.matrix @ (inner.W + inner.V)))
        assert sensed >= sc.sensing_rhs_coeff * inner.t * (1 - 1e-6)

    def test_strong_duality(self, inner):
        assert inner.f_gamma > 0
        assert inner.duals.lam == pytest.approx(inner.f_gamma, rel=1e-6)

    def test_dual_certificates(self, inner, paper_scenario):
        assert inner.duals_positive
        assert np.all(inner.duals.beta >= -1e-12)
        report = kkt_report(inner, paper_scenario)
        assert report.violations(tol=1e-7) == []
        assert report.ok()

    def test_no_an_block_infeasible_at_low_cap(self, paper_scenario):
        res = solve_inner(GAMMA, paper_scenario, include_an=False)
        assert res.status == sdp_solver.INFEASIBLE

    def test_no_an_block(self, paper_scenario):
        res = solve_inner(1e7, paper_scenario, include_an=False)
        assert res.optimal
        np.testing.assert_array_equal(res.V, np.zeros((8, 8)))
        assert math.isnan(kkt_report(res, paper_scenario).lambda_max_b)

    def test_infeasible_threshold(self, paper_scenario):
        res = solve_inner(GAMMA, paper_scenario.with_threshold(1e-6))
        assert not res.optimal
        assert res.status == sdp_solver.INFEASIBLE
        assert res.duals is None
        assert math.isnan(res.f_gamma)


class TestReconstruction:
    def test_rank_one(self, inner, paper_scenario):
        w_bar, v_bar, t_bar, report = reconstruct_rank_one(inner, paper_scenario)
        assert report.ok
        ev = np.linalg.eigvalsh(w_bar)
        assert ev[-2] <= 1e-7 * ev[-1]
        f_bar = np.real(np.trace(paper_scenario.h_matrix @ w_bar))
        assert f_bar == pytest.approx(inner.f_gamma, rel=1e-7)
        ev_v = np.linalg.eigvalsh(v_bar)
        assert report.an_rank == int(np.sum(ev_v > 1e-9 * ev_v[-1]))
        assert report.an_rank <= 4
        assert report.an_dropped < 1e-6
        assert t_bar == inner.t
        assert report.trace_total_error < 1e-6

    def test_an_rank_above_bound_raises(self, inner, paper_scenario):
        eps = 1e-6 * max(np.trace(inner.W).real, np.trace(inner.V).real)
        noisy = dataclasses.replace(inner, V=inner.V + eps * np.eye(8))
        with patch.object(beam_design, "_purify_an", lambda v, r: (v, 0.0)):
            with pytest.raises(CertificateError) as excinfo:
                reconstruct_rank_one(noisy, paper_scenario)
        report = excinfo.value.report
        assert report.an_rank == 8
        assert any("rank 8" in v for v in report.violations)

    def test_purify_keeps_strongest_eigenpairs(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
        ev = np.array([10.0, 5.0, 1.0, 0.5, 1e-6, 1e-6, 1e-7, 0.0])
        v = (q * ev) @ q.conj().T
        purified, dropped = beam_design._purify_an(v, 4)
        got = np.linalg.eigvalsh(purified)
        assert int(np.sum(got > 1e-9 * got[-1])) == 4
        np.testing.assert_allclose(got[-4:], [0.5, 1.0, 5.0, 10.0], rtol=1e-9)
        assert dropped == pytest.approx(2.1e-6 / np.linalg.norm(v), rel=1e-6)
        np.testing.assert_allclose(purified, purified.conj().T)

    def test_purify_leaves_low_rank_alone(self):
        v = np.diag([3.0, 2.0, 0.0, 0.0]).astype(complex)
        purified, dropped = beam_design._purify_an(v, 2)
        assert purified is v
        assert dropped == 0.0

    def test_rejects_non_optimal(self, paper_scenario):
        res = solve_inner(GAMMA, paper_scenario.with_threshold(1e-6))
        with pytest.raises(InvalidInputError):
            reconstruct_rank_one(res, paper_scenario)

    def test_failed_check_raises(self, inner, paper_scenario):
        with patch.object(beam_design, "RANK_ONE_TOL", -1.0):
            with pytest.raises(CertificateError) as excinfo:
                reconstruct_rank_one(inner, paper_scenario)
        assert not excinfo.value.report.ok

    def test_retry_with_tighter_tolerances(self, inner, paper_scenario):
        real = beam_design.reconstruct_rank_one
        calls = []

        def flaky(result, scenario):
            calls.append(result)
            if len(calls) == 1:
                raise CertificateError("first attempt")
            return real(result, scenario)

        with patch.object(beam_design, "reconstruct_rank_one", side_effect=flaky):
            retry, (w_bar, _, _, report) = beam_design._certified_reconstruction(
                inner, paper_scenario, None
            )
        assert len(calls) == 2
        assert retry is not inner
        assert report.ok


class TestExtractBeams:
    def test_factorization(self, inner, paper_scenario):
        w_bar, v_bar, t_bar, _ = reconstruct_rank_one(inner, paper_scenario)
        w, vs = extract_beams(w_bar, v_bar, t_bar, max_an_beams=4)
        target = w_bar / t_bar
        np.testing.assert_allclose(
            np.outer(w, w.conj()), target, atol=1e-6 * np.abs(target).max()
        )
        idx = int(np.argmax(np.abs(w)))
        assert w[idx].imag == pytest.approx(0.0, abs=1e-15)
        assert w[idx].real > 0
        assert len(vs) <= 4

    def test_an_covariance(self, rng):
        n = 6
        vecs = [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(3)]
        v_bar = sum(np.outer(v, v.conj()) for v in vecs)
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w, vs = extract_beams(2 * np.outer(u, u.conj()), 2 * v_bar, 2.0)
        assert len(vs) == 3
        np.testing.assert_allclose(sum(np.outer(v, v.conj()) for v in vs), v_bar, atol=1e-10)
        np.testing.assert_allclose(np.outer(w, w.conj()), np.outer(u, u.conj()), atol=1e-10)

    def test_an_rank_above_cap_raises(self):
        v_bar = np.diag([4.0, 3.0, 2.0, 1.0]).astype(complex)
        w_bar = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
        with pytest.raises(CertificateError, match="rank 4"):
            extract_beams(w_bar, v_bar, 1.0, max_an_beams=2)
        _, vs = extract_beams(w_bar, v_bar, 1.0, max_an_beams=4)
        assert [float(np.vdot(v, v).real) for v in vs] == pytest.approx([4.0, 3.0, 2.0, 1.0])


class TestGammaSearch:
    def test_golden_refinement_finds_peak(self, paper_scenario):
        def fake(gamma, scenario, settings, include_an):
            rate = -((math.log(gamma) - math.log(50.0)) ** 2)
            return GammaPoint(gamma, 1.0, rate, sdp_solver.OPTIMAL)

        with patch.object(beam_design, "_evaluate", side_effect=fake):
            points = beam_design._golden_refine(1.0, 1e4, 30, paper_scenario, None, True)
        best = max(points, key=lambda p: p.score)
        assert best.gamma == pytest.approx(50.0, rel=1e-3)

    def test_non_optimal_points_score_minus_inf(self):
        assert GammaPoint(1.0, math.nan, math.nan, sdp_solver.INFEASIBLE).score == -math.inf

    def test_sweep_is_thread_independent(self, paper_scenario):
        cfg = GammaSearchConfig(grid_points=6)
        serial = sweep_gamma(paper_scenario, cfg)
        threaded = sweep_gamma(paper_scenario, GammaSearchConfig(grid_points=6, threads=3))
        assert [p.gamma for p in serial] == [p.gamma for p in threaded]
        assert [p.secrecy_rate for p in serial] == [p.secrecy_rate for p in threaded]

    def test_search_gamma(self, paper_scenario, fast_search):
        sc = paper_scenario
        sol = search_gamma(sc, fast_search)
        assert sol.scheme == "proposed"
        assert sol.secrecy_rate > 0
        assert sol.power_used <= sc.channels.power_budget_w * (1 + 1e-9)
        assert sol.pcrb_value <= sc.pcrb_threshold * (1 + 1e-6)
        assert len(sol.an_beams) <= 4
        assert sol.reconstruction.ok
        assert sol.kkt.ok()
        report = secrecy_report(sol.w, sol.an_beams, sc)
        assert report.worst_case_rate == pytest.approx(sol.secrecy_rate, abs=1e-5)
        assert max(report.sinr_eve) <= sol.gamma_star * (1 + 1e-4)
        assert len(sol.points) == fast_search.grid_points
        assert len(sol.refined_points) == fast_search.refine_iterations

    def test_infeasible_scenario(self, paper_scenario, fast_search):
        sc = paper_scenario.with_threshold(1e-6)
        with pytest.raises(InfeasibleScenarioError) as excinfo:
            search_gamma(sc, fast_search)
        assert not excinfo.value.probe.feasible
        assert len(excinfo.value.points) == fast_search.grid_points
        assert all(p.status != sdp_solver.OPTIMAL for p in excinfo.value.points)


class TestFeasibilityProbe:
    def test_reference(self, paper_scenario):
        probe = feasibility_probe(paper_scenario)
        assert probe.feasible
        assert probe.max_lhs == pytest.approx(0.1 * paper_scenario.qbar.lambda_max)
        assert probe.required_rhs == pytest.approx(paper_scenario.sensing_rhs_coeff)

    def test_too_stringent(self, paper_scenario):
        probe = feasibility_probe(paper_scenario.with_threshold(1e-6))
        assert not probe.feasible
        assert probe.required_rhs > probe.max_lhs

    def test_vacuous(self, paper_scenario):
        probe = feasibility_probe(paper_scenario.with_threshold(1e-3))
        assert probe.vacuous and probe.feasible


class TestBenchmarks:
    def test_mrt(self, paper_scenario):
        sol = benchmark_mrt(paper_scenario)
        assert sol.scheme == "mrt"
        assert sol.an_beams == []
        assert sol.power_used == pytest.approx(0.1)
        assert sol.secrecy_rate == secrecy_report(sol.w, [], paper_scenario).worst_case_rate
        assert not sol.feasible

    def test_mrt_feasible_when_loose(self, paper_scenario):
        sol = benchmark_mrt(paper_scenario.with_threshold(6e-5))
        assert sol.feasible
        assert sol.secrecy_rate == pytest.approx(0.0, abs=1e-9)

    def test_no_an(self, paper_scenario, fast_search):
        sol = benchmark_no_an(paper_scenario, fast_search)
        assert sol.scheme == "no_an"
        assert sol.an_beams == []
        assert sol.secrecy_rate >= 0.0
        assert sol.power_used <= 0.1 * (1 + 1e-9)
        if not sol.suboptimal:
            assert sol.feasible


@pytest.mark.slow
class TestReferenceTrends:
    def test_certificates_across_full_sweep(self, paper_scenario):
        points = sweep_gamma(paper_scenario, GammaSearchConfig())
        optimal = [p for p in points if p.status == sdp_solver.OPTIMAL]
        assert len(optimal) == len(points)
        for p in optimal:
            res = p.result
            if res.f_gamma > 0:
                assert res.duals_positive
                assert kkt_report(res, paper_scenario).violations(tol=1e-7) == []
            _, v_bar, _, report = reconstruct_rank_one(res, paper_scenario)
            assert report.ok, report.violations
            ev = np.linalg.eigvalsh(v_bar)
            assert int(np.sum(ev > 1e-9 * max(ev[-1], 1e-300))) <= 4

    def test_secrecy_rate_against_gamma(self, paper_scenario):
        best = []
        for threshold in (2e-5, 2.68e-5, 4e-5):
            sc = paper_scenario.with_threshold(threshold)
            points = sweep_gamma(sc, GammaSearchConfig())
            rates = [p.secrecy_rate for p in points if p.status == sdp_solver.OPTIMAL]
            assert _single_sign_change(rates)
            best.append(search_gamma(sc).secrecy_rate)
        assert best[0] <= best[1] + 1e-6
        assert best[1] <= best[2] + 1e-6

    def test_beampattern_shape(self, beampattern_scenario):
        sc = beampattern_scenario
        sol = search_gamma(sc)

        def pattern(deg):
            bp = beampattern(sol.w, sol.an_beams, np.radians(deg), sc.array)
            return bp.info_power, bp.an_power

        user_info, user_an = pattern(np.array([-10.0]))
        assert 10 * np.log10(user_info[0] / user_an[0]) >= 3.0
        for theta in np.degrees(sc.prior.angles_rad):
            info, an = pattern(np.array([theta]))
            assert an[0] > info[0]
            # the dip sits inside the window, not necessarily on the 1 degree grid point
            around, _ = pattern(theta + np.arange(-5.0, 6.0))
            assert int(np.argmin(around)) not in (0, around.size - 1)

    def test_tradeoff(self, paper_scenario):
        thresholds = np.linspace(1e-5, 6e-5, 10)
        proposed, mrt_feasible = [], []
        for threshold in thresholds:
            sc = paper_scenario.with_threshold(float(threshold))
            proposed.append(search_gamma(sc).secrecy_rate)
            mrt = benchmark_mrt(sc)
            mrt_feasible.append(mrt.feasible)
            if mrt.feasible:
                assert mrt.secrecy_rate == pytest.approx(0.0, abs=1e-9)
            no_an = benchmark_no_an(sc)
            if no_an.feasible:
                assert no_an.secrecy_rate == pytest.approx(0.0, abs=1e-6)
        assert all(b >= a - 1e-6 for a, b in zip(proposed, proposed[1:]))
        assert not mrt_feasible[0]
        assert mrt_feasible[-1]

    def test_monte_carlo_respects_bound(self, paper_scenario):
        sc = paper_scenario
        sol = search_gamma(sc)
        res = mc_mse_oracle(
            sol.w,
            sol.an_beams,
            sc,
            complex(sc.beta_min_abs),
            n_trials=2000,
            n_snapshots=64,
            seed=7,
            threads=4,
        )
        r_x = sol.covariance
        bound = pcrb_exact(
            r_x, sc.beta_min_abs, sc.prior, sc.array, sc.channels, n_snapshots=64
        )
        assert res.pcrb_exact == pytest.approx(bound)
        assert res.empirical_mse >= 0.9 * res.pcrb_exact
