"""Metrics for designed beams: SINRs, secrecy rates, beampatterns, KKT reports, MC oracle."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import minimize_scalar

from isacbeam.array_model import (
    ArrayConfig,
    ChannelParams,
    gmm_logpdf,
    steering_rx,
    steering_tx,
)
from isacbeam.errors import InvalidInputError
from isacbeam.pcrb import pcrb_closed_form, pcrb_exact
from isacbeam.scenario import ScenarioConfig

if TYPE_CHECKING:
    from isacbeam.beam_design import InnerSolveResult

logger = logging.getLogger(__name__)

MAP_GRID_POINTS = 4096
MAP_WINDOW_SIGMAS = 6.0
MIN_MEANINGFUL_TRIALS = 1000


def _as_beams(w, vs) -> tuple[np.ndarray, list[np.ndarray]]:
    return np.asarray(w, dtype=complex), [np.asarray(v, dtype=complex) for v in vs]


def sinr_user(w, vs, h, sigma2: float) -> float:
    """User SINR |h^H w|^2 / (sum_k |h^H v_k|^2 + sigma^2)."""
    w, vs = _as_beams(w, vs)
    h = np.asarray(h, dtype=complex)
    interference = sum(abs(np.vdot(h, v)) ** 2 for v in vs)
    return abs(np.vdot(h, w)) ** 2 / (interference + sigma2)


def sinr_eve(w, vs, theta_k: float, channels: ChannelParams, cfg: ArrayConfig) -> float:
    """Eavesdropper SINR at angle ``theta_k``, referred to the steering-vector scale."""
    w, vs = _as_beams(w, vs)
    a = steering_tx(theta_k, cfg)
    interference = sum(abs(np.vdot(a, v)) ** 2 for v in vs)
    return abs(np.vdot(a, w)) ** 2 / (interference + channels.eve_noise_term)


@dataclass(frozen=True)
class SecrecyReport:
    """Per-location and worst-case secrecy rates in bits/s/Hz."""

    sinr_user: float
    sinr_eve: list[float]
    rates: list[float]
    worst_case_rate: float


def secrecy_report(w, vs, scenario: ScenarioConfig) -> SecrecyReport:
    """Secrecy rate against each candidate eavesdropper angle, clamped at zero."""
    ch = scenario.channels
    user = sinr_user(w, vs, ch.user_channel, ch.noise_user_w)
    eves = [sinr_eve(w, vs, th, ch, scenario.array) for th in scenario.prior.angles_rad]
    rates = [max(0.0, math.log2(1.0 + user) - math.log2(1.0 + e)) for e in eves]
    return SecrecyReport(sinr_user=user, sinr_eve=eves, rates=rates, worst_case_rate=min(rates))


@dataclass(frozen=True)
class PowerSplit:
    """Power carried by the information beam and by the AN beams."""

    info_power: float
    an_power: float

    @property
    def total(self) -> float:
        """Total transmit power."""
        return self.info_power + self.an_power


def power_split(w, vs) -> PowerSplit:
    """Split the transmit power into information and AN parts."""
    w, vs = _as_beams(w, vs)
    return PowerSplit(
        info_power=float(np.vdot(w, w).real),
        an_power=float(sum(np.vdot(v, v).real for v in vs)),
    )


def sensing_feasible(w, vs, scenario: ScenarioConfig) -> bool:
    """Closed-form PCRB meets the threshold, or the threshold is vacuous."""
    if scenario.sensing_vacuous:
        return True
    value = pcrb_closed_form(
        w, vs, scenario.beta_min_abs, scenario.qbar, scenario.prior, scenario.channels
    )
    return value <= scenario.pcrb_threshold * (1.0 + 1e-9)


@dataclass(frozen=True)
class Beampattern:
    """Transmit power toward each angle, split into information and AN parts (watts)."""

    theta: np.ndarray
    info_power: np.ndarray
    an_power: np.ndarray


def beampattern(w, vs, theta_grid, cfg: ArrayConfig) -> Beampattern:
    """Information and AN power radiated toward each angle of ``theta_grid``."""
    w, vs = _as_beams(w, vs)
    theta = np.asarray(theta_grid, dtype=float)
    a = steering_tx(theta, cfg)
    info = np.abs(a.conj() @ w) ** 2
    an = np.zeros_like(info)
    for v in vs:
        an += np.abs(a.conj() @ v) ** 2
    return Beampattern(theta=theta, info_power=info, an_power=an)


@dataclass
class KktReport:
    """Dual-side optimality conditions of the inner problem.

    Raw values are in the problem's own units; the ``*_rel`` values divide by
    the magnitude of the terms forming each quantity.
    """

    lambda_max_s: float
    lambda_max_s_rel: float
    lambda_max_b: float
    lambda_max_b_rel: float
    xi: float
    xi_rel: float
    sw_rel: float
    bv_rel: float
    lam: float
    rho: float
    psi: float
    beta_min: float
    f_gamma: float

    def violations(self, tol: float = 1e-7, dual_floor: float = 1e-10) -> list[str]:
        """Human readable description of every failed optimality condition."""
        out = []
        if self.lambda_max_s_rel > tol:
            out.append(f"lambda_max(S)={self.lambda_max_s_rel:.3g} (relative) > {tol:g}")
        if not math.isnan(self.lambda_max_b_rel) and self.lambda_max_b_rel > tol:
            out.append(f"lambda_max(B)={self.lambda_max_b_rel:.3g} (relative) > {tol:g}")
        if self.xi_rel > tol:
            out.append(f"xi={self.xi_rel:.3g} (relative) > {tol:g}")
        if self.f_gamma > 0 and not (self.lam > dual_floor and self.rho > dual_floor):
            out.append(f"dual positivity fails: lambda={self.lam:.3g}, rho={self.rho:.3g}")
        if self.psi < -tol or self.beta_min < -tol:
            out.append("negative inequality multiplier")
        return out

    def ok(self, tol: float = 1e-7) -> bool:
        """True when no optimality condition is violated."""
        return not self.violations(tol)


def _rel_product(s: np.ndarray, x: np.ndarray) -> float:
    denom = np.linalg.norm(s) * np.linalg.norm(x)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(s @ x) / denom)


def kkt_report(result: InnerSolveResult, scenario: ScenarioConfig) -> KktReport:
    """Rebuild S, B and xi from the inner solve's duals and measure their signs."""
    ch = scenario.channels
    n = scenario.array.n_tx
    duals = result.duals
    beta = np.asarray(duals.beta)
    h_mat = scenario.h_matrix
    q = scenario.qbar.matrix
    eye = np.eye(n)
    sum_a = sum(b * a for b, a in zip(beta, scenario.a_matrices))
    gamma = result.gamma
    c_e = scenario.eve_noise_term
    c_s = scenario.sensing_rhs_coeff

    norm_h = float(np.linalg.norm(h_mat, 2))
    norm_a = float(n)
    norm_q = float(np.linalg.norm(q, 2))

    s = h_mat - sum_a + duals.psi * q - duals.rho * eye
    scale_s = norm_h + float(np.sum(np.abs(beta))) * norm_a + abs(duals.psi) * norm_q + abs(
        duals.rho
    )
    lam_s = float(np.linalg.eigvalsh(s)[-1])

    if result.include_an:
        b = -duals.lam * h_mat + gamma * sum_a + duals.psi * q - duals.rho * eye
        scale_b = (
            abs(duals.lam) * norm_h
            + gamma * float(np.sum(np.abs(beta))) * norm_a
            + abs(duals.psi) * norm_q
            + abs(duals.rho)
        )
        lam_b = float(np.linalg.eigvalsh(b)[-1])
        lam_b_rel = lam_b / scale_b if scale_b > 0 else lam_b
        bv = _rel_product(b, result.V)
    else:
        lam_b = lam_b_rel = math.nan
        bv = 0.0

    xi = (
        -duals.lam * ch.noise_user_w
        + gamma * c_e * float(np.sum(beta))
        + duals.rho * ch.power_budget_w
        - duals.psi * c_s
    )
    scale_xi = (
        abs(duals.lam) * ch.noise_user_w
        + gamma * c_e * float(np.sum(np.abs(beta)))
        + abs(duals.rho) * ch.power_budget_w
        + abs(duals.psi) * c_s
    )
    return KktReport(
        lambda_max_s=lam_s,
        lambda_max_s_rel=lam_s / scale_s if scale_s > 0 else lam_s,
        lambda_max_b=lam_b,
        lambda_max_b_rel=lam_b_rel,
        xi=xi,
        xi_rel=xi / scale_xi if scale_xi > 0 else xi,
        sw_rel=_rel_product(s, result.W),
        bv_rel=bv,
        lam=duals.lam,
        rho=duals.rho,
        psi=duals.psi,
        beta_min=float(np.min(beta)) if beta.size else 0.0,
        f_gamma=result.f_gamma,
    )


@dataclass(frozen=True)
class McResult:
    """Monte-Carlo MAP estimation error against the exact PCRB."""

    empirical_mse: float
    pcrb_exact: float
    n_trials: int
    n_snapshots: int
    seed: int
    grid_step: float
    errors: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    @property
    def ratio(self) -> float:
        """Empirical MSE over the exact PCRB."""
        return self.empirical_mse / self.pcrb_exact


def _map_grid(scenario: ScenarioConfig) -> tuple[np.ndarray, float]:
    """Dense grid split across the prior windows, and its spacing."""
    prior = scenario.prior
    half = MAP_WINDOW_SIGMAS * prior.sigma_theta
    per = MAP_GRID_POINTS // prior.k
    windows = [np.linspace(t - half, t + half, per) for t in prior.angles_rad]
    return np.unique(np.concatenate(windows)), 2.0 * half / (per - 1)


def _concentrated_loglik(
    theta, x: np.ndarray, y: np.ndarray, syy: float, scenario: ScenarioConfig
) -> np.ndarray:
    """Log-likelihood with beta profiled out by least squares, plus the log prior."""
    cfg = scenario.array
    a = np.atleast_2d(steering_tx(theta, cfg))
    b = np.atleast_2d(steering_rx(theta, cfg))
    ax = a.conj() @ x
    by = b.conj() @ y
    num = np.sum(ax.conj() * by, axis=1)
    den = cfg.n_rx * np.sum(np.abs(ax) ** 2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        fit = np.where(den > 0, np.abs(num) ** 2 / np.where(den > 0, den, 1.0), 0.0)
    resid = syy - fit
    return -resid / scenario.channels.noise_radar_w + gmm_logpdf(theta, scenario.prior)


def _mc_trial(
    trial: int,
    seed: int,
    w: np.ndarray,
    vs: list[np.ndarray],
    beta: complex,
    n_snapshots: int,
    scenario: ScenarioConfig,
    grid: np.ndarray,
    step: float,
) -> float:
    rng = np.random.default_rng([seed, trial])
    prior = scenario.prior
    cfg = scenario.array
    k = rng.choice(prior.k, p=prior.weights)
    theta = prior.angles_rad[k] + prior.sigma_theta * rng.standard_normal()

    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)

    x = np.outer(w, cn(n_snapshots))
    for v in vs:
        x = x + np.outer(v, cn(n_snapshots))
    a = steering_tx(theta, cfg)
    b = steering_rx(theta, cfg)
    noise = math.sqrt(scenario.channels.noise_radar_w) * cn(cfg.n_rx, n_snapshots)
    y = beta * np.outer(b, a.conj() @ x) + noise
    syy = float(np.sum(np.abs(y) ** 2))

    ll = _concentrated_loglik(grid, x, y, syy, scenario)
    coarse = grid[int(np.argmax(ll))]
    refined = minimize_scalar(
        lambda t: -float(_concentrated_loglik(np.array([t]), x, y, syy, scenario)[0]),
        bounds=(coarse - step, coarse + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    estimate = refined.x if refined.fun <= -float(np.max(ll)) else coarse
    return float(estimate - theta)


def mc_mse_oracle(
    w,
    vs,
    scenario: ScenarioConfig,
    beta: complex,
    n_trials: int,
    n_snapshots: int,
    seed: int,
    threads: int = 1,
) -> McResult:
    """Empirical MSE of the MAP angle estimate under the simulated echo model.

    Each trial draws theta from the prior, transmits ``n_snapshots`` snapshots
    with fresh unit-power symbols on every beam and estimates theta on a dense
    grid followed by a bounded scalar refinement. Trials are seeded by
    ``(seed, trial)`` so results do not depend on scheduling.
    """
    if n_trials < 1 or n_snapshots < 1:
        raise InvalidInputError("n_trials and n_snapshots must be >= 1")
    if n_trials < MIN_MEANINGFUL_TRIALS:
        logger.warning("Only %d MC trials; the MSE comparison is noisy", n_trials)
    w, vs = _as_beams(w, vs)
    r_x = np.outer(w, w.conj())
    for v in vs:
        r_x = r_x + np.outer(v, v.conj())
    bound = pcrb_exact(
        r_x,
        beta,
        scenario.prior,
        scenario.array,
        scenario.channels,
        rx_derivative="analytic",
        n_snapshots=n_snapshots,
    )
    grid, fine_step = _map_grid(scenario)
    if fine_step**2 > bound:
        logger.warning(
            "MAP grid step %.3g rad is coarse against the PCRB %.3g rad^2; relying on refinement",
            fine_step,
            bound,
        )

    def run(trial: int) -> float:
        return _mc_trial(trial, seed, w, vs, beta, n_snapshots, scenario, grid, fine_step)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errors = np.array(list(pool.map(run, range(n_trials))))
    else:
        errors = np.array([run(t) for t in range(n_trials)])
    mse = float(np.mean(errors**2))
    logger.info("MC oracle: %d trials, MSE=%.4g, PCRB=%.4g", n_trials, mse, bound)
    return McResult(
        empirical_mse=mse,
        pcrb_exact=bound,
        n_trials=n_trials,
        n_snapshots=n_snapshots,
        seed=seed,
        grid_step=fine_step,
        errors=errors,
    )
