"""Secure beam design: inner SDP per SINR cap, rank-one recovery and the outer gamma search.

For a fixed eavesdropper SINR cap ``gamma`` the fractional design problem is
turned into a linear SDP over (W, V, t) by a Charnes-Cooper substitution. The
solver works on a rescaled copy, W~ = (sigma^2/P) W, V~ = (sigma^2/P) V,
t~ = sigma^2 t, which keeps every row of order one; results are mapped back to
the original variables before anyone sees them.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from isacbeam import sdp_solver
from isacbeam.errors import (
    CertificateError,
    InfeasibleScenarioError,
    InvalidInputError,
    NumericalError,
)
from isacbeam.evaluation import (
    KktReport,
    kkt_report,
    power_split,
    secrecy_report,
    sensing_feasible,
)
from isacbeam.pcrb import pcrb_closed_form
from isacbeam.scenario import ScenarioConfig
from isacbeam.sdp_solver import Constraint, SdpProblem, SdpSolution, SolverSettings

logger = logging.getLogger(__name__)

# Eigenvalues below this fraction of the largest are zero for rank decisions.
RANK_TOL = 1e-9
# Acceptance threshold for lambda_2 / lambda_1 of the recovered information covariance.
RANK_ONE_TOL = 1e-7
# Null-space candidates of D* are never taken above this fraction of the dual scale.
NULL_SPACE_MAX = 1e-5
CERTIFICATE_TOL = 1e-7
MIN_T_NORMALIZED = 1e-12
DUAL_POSITIVITY_FLOOR = 1e-10


@dataclass(frozen=True)
class GammaSearchConfig:
    """Outer search grid; ``gamma_max=None`` uses the eavesdropper's interference-free SINR."""

    gamma_min: float = 1e-4
    gamma_max: float | None = None
    grid_points: int = 64
    refine_iterations: int = 20
    threads: int = 1

    def __post_init__(self):
        if not self.gamma_min > 0:
            raise InvalidInputError(f"gamma_min must be > 0, got {self.gamma_min!r}")
        if self.gamma_max is not None and not self.gamma_max > self.gamma_min:
            raise InvalidInputError("gamma_max must exceed gamma_min")
        if self.grid_points < 2:
            raise InvalidInputError("grid_points must be >= 2")
        if self.refine_iterations < 0 or self.threads < 1:
            raise InvalidInputError("refine_iterations must be >= 0 and threads >= 1")


@dataclass(frozen=True)
class DualMultipliers:
    """Multipliers of the eavesdropper caps, normalization, power and sensing rows."""

    beta: np.ndarray
    lam: float
    rho: float
    psi: float


@dataclass
class InnerSolveResult:
    """Inner SDP answer for one gamma, in the original (unscaled) variables."""

    gamma: float
    status: str
    W: np.ndarray
    V: np.ndarray
    t: float
    f_gamma: float
    duals: DualMultipliers | None
    include_an: bool = True
    sensing_vacuous: bool = False
    duals_positive: bool = True
    solution: SdpSolution | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        """True when the inner SDP reached optimality."""
        return self.status == sdp_solver.OPTIMAL


@dataclass
class ReconstructionReport:
    """Outcome of projecting W* onto a rank-one matrix and re-checking feasibility.

    ``an_rank`` is the numerical rank of V_bar and ``an_dropped`` the trace
    removed from it by purification, relative to its Frobenius norm.
    """

    null_dim: int
    rank_ratio: float
    checks: dict[str, float]
    trace_total_error: float
    violations: list[str] = field(default_factory=list)
    an_rank: int = 0
    an_dropped: float = 0.0

    @property
    def ok(self) -> bool:
        """True when no re-feasibility check failed."""
        return not self.violations


@dataclass
class GammaPoint:
    """One evaluation of the inner problem; ``secrecy_rate`` is g(gamma) before clamping."""

    gamma: float
    f_gamma: float
    secrecy_rate: float
    status: str
    result: InnerSolveResult | None = field(default=None, repr=False)

    @property
    def score(self) -> float:
        """Secrecy rate for OPTIMAL points, -inf otherwise."""
        return self.secrecy_rate if self.status == sdp_solver.OPTIMAL else -math.inf


@dataclass(frozen=True)
class FeasibilityReport:
    """Whether tr(Q R) can reach the sensing requirement within the power budget."""

    feasible: bool
    max_lhs: float
    required_rhs: float
    vacuous: bool


@dataclass
class BeamformingSolution:
    """Designed information beam, AN beams and the quality numbers attached to them."""

    w: np.ndarray
    an_beams: list[np.ndarray]
    gamma_star: float
    secrecy_rate: float
    pcrb_value: float
    power_used: float
    feasible: bool = True
    scheme: str = "proposed"
    suboptimal: bool = False
    reconstruction: ReconstructionReport | None = None
    kkt: KktReport | None = None
    inner: InnerSolveResult | None = field(default=None, repr=False)
    points: list[GammaPoint] = field(default_factory=list, repr=False)
    refined_points: list[GammaPoint] = field(default_factory=list, repr=False)

    @property
    def covariance(self) -> np.ndarray:
        """Transmit covariance w w^H plus the AN beams' outer products."""
        r = np.outer(self.w, self.w.conj())
        for v in self.an_beams:
            r = r + np.outer(v, v.conj())
        return r


def assemble_inner(
    gamma: float,
    scenario: ScenarioConfig,
    include_an: bool = True,
    normalized: bool = False,
) -> SdpProblem:
    """Build the Charnes-Cooper SDP for SINR cap ``gamma``.

    Rows: one eavesdropper cap per candidate angle (LE), the normalization
    (EQ), the power budget (LE) and the sensing requirement (GE), in that
    order. Blocks are (W, V) plus the scalar t; ``include_an=False`` drops V.
    """
    if not gamma > 0:
        raise InvalidInputError(f"gamma must be > 0, got {gamma!r}")
    ch = scenario.channels
    n = scenario.array.n_tx
    zero = np.zeros((n, n), dtype=complex)
    eye = np.eye(n, dtype=complex)
    q = scenario.qbar.matrix
    c_e = scenario.eve_noise_term
    c_s = scenario.sensing_rhs_coeff
    if scenario.sensing_vacuous:
        logger.debug("Sensing constraint is vacuous at Gamma=%.4g", scenario.pcrb_threshold)

    if normalized:
        h_obj = (ch.power_budget_w / ch.noise_user_w) * scenario.h_matrix
        eve_t = -gamma * c_e / ch.power_budget_w
        norm_t = 1.0
        power_t = -1.0
        sense_t = -c_s / ch.power_budget_w
    else:
        h_obj = scenario.h_matrix
        eve_t = -gamma * c_e
        norm_t = ch.noise_user_w
        power_t = -ch.power_budget_w
        sense_t = -c_s

    def blocks(w_coef, v_coef):
        return [w_coef, v_coef] if include_an else [w_coef]

    constraints = [
        Constraint(blocks(a_k, -gamma * a_k), [eve_t], 0.0, "LE", f"eve_cap_{k}")
        for k, a_k in enumerate(scenario.a_matrices)
    ]
    constraints.append(Constraint(blocks(zero, h_obj), [norm_t], 1.0, "EQ", "normalization"))
    constraints.append(Constraint(blocks(eye, eye), [power_t], 0.0, "LE", "power"))
    constraints.append(Constraint(blocks(q, q), [sense_t], 0.0, "GE", "sensing"))
    return SdpProblem(
        psd_blocks=[n, n] if include_an else [n],
        scalar_count=1,
        objective_blocks=blocks(h_obj, zero),
        objective_scalars=[0.0],
        constraints=constraints,
    )


def solve_inner(
    gamma: float,
    scenario: ScenarioConfig,
    settings: SolverSettings | None = None,
    include_an: bool = True,
) -> InnerSolveResult:
    """Solve the inner SDP for ``gamma`` and map the answer back to (W, V, t).

    A non-optimal status comes back as a result with zero blocks. When
    f(gamma) > 0 the multipliers lambda and rho are expected to be positive;
    a violation is logged and reported through ``duals_positive``, never
    raised. That flag is the whole contract for dual positivity.

    Raises:
        NumericalError: the Charnes-Cooper scale collapsed to zero.
    """
    ch = scenario.channels
    n = scenario.array.n_tx
    k = scenario.prior.k
    problem = assemble_inner(gamma, scenario, include_an=include_an, normalized=True)
    sol = sdp_solver.solve(problem, settings)
    if not sol.optimal:
        logger.debug("Inner solve at gamma=%.4g returned %s", gamma, sol.status)
        zeros = np.zeros((n, n), dtype=complex)
        return InnerSolveResult(
            gamma=gamma,
            status=sol.status,
            W=zeros,
            V=zeros,
            t=math.nan,
            f_gamma=math.nan,
            duals=None,
            include_an=include_an,
            sensing_vacuous=scenario.sensing_vacuous,
            solution=sol,
        )

    t_norm = float(sol.primal_scalars[0])
    if t_norm < MIN_T_NORMALIZED:
        raise NumericalError(
            "Charnes-Cooper scale collapsed to zero", {"gamma": gamma, "t_normalized": t_norm}
        )
    up = ch.power_budget_w / ch.noise_user_w
    down = ch.noise_user_w / ch.power_budget_w
    w_mat = up * sol.primal_blocks[0]
    v_mat = up * sol.primal_blocks[1] if include_an else np.zeros((n, n), dtype=complex)
    mult = sol.multipliers
    duals = DualMultipliers(
        beta=down * np.asarray(mult[:k]),
        lam=float(mult[k]),
        rho=down * float(mult[k + 1]),
        psi=down * float(mult[k + 2]),
    )
    f_gamma = float(np.real(np.trace(scenario.h_matrix @ w_mat)))
    floor = DUAL_POSITIVITY_FLOOR
    duals_positive = not (f_gamma > 0) or (duals.lam > floor and duals.rho > floor)
    if not duals_positive:
        logger.warning(
            "Dual positivity fails at gamma=%.4g: lambda=%.3g rho=%.3g",
            gamma,
            duals.lam,
            duals.rho,
        )
    logger.debug("gamma=%.4g f=%.6g in %d iterations", gamma, f_gamma, sol.iterations)
    return InnerSolveResult(
        gamma=gamma,
        status=sol.status,
        W=w_mat,
        V=v_mat,
        t=t_norm / ch.noise_user_w,
        f_gamma=f_gamma,
        duals=duals,
        include_an=include_an,
        sensing_vacuous=scenario.sensing_vacuous,
        duals_positive=duals_positive,
        solution=sol,
    )


def _rank_ratio(mat: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(mat)
    if ev[-1] <= 0:
        return math.inf
    return max(ev[-2], 0.0) / ev[-1] if ev.size > 1 else 0.0


def _dual_scale(result: InnerSolveResult, scenario: ScenarioConfig) -> float:
    d = result.duals
    return (
        float(np.linalg.norm(scenario.h_matrix, 2))
        + float(np.sum(np.abs(d.beta))) * scenario.array.n_tx
        + abs(d.psi) * scenario.qbar.lambda_max
        + abs(d.rho)
    )


def _recheck(
    result: InnerSolveResult,
    scenario: ScenarioConfig,
    w_bar: np.ndarray,
    v_bar: np.ndarray,
) -> dict[str, float]:
    ch = scenario.channels
    gamma, t = result.gamma, result.t
    h_mat = scenario.h_matrix
    q = scenario.qbar.matrix
    c_e = scenario.eve_noise_term
    c_s = scenario.sensing_rhs_coeff
    nw, nv = np.linalg.norm(w_bar), np.linalg.norm(v_bar)

    def tr(a, b):
        return float(np.real(np.trace(a @ b)))

    checks: dict[str, float] = {}
    f_ref = result.f_gamma
    checks["objective"] = abs(tr(h_mat, w_bar) - f_ref) / max(abs(f_ref), 1e-300)
    for k, a_k in enumerate(scenario.a_matrices):
        lhs = tr(a_k, w_bar) - gamma * tr(a_k, v_bar) - gamma * t * c_e
        scale = np.linalg.norm(a_k) * (nw + gamma * nv) + gamma * t * c_e
        checks[f"eve_cap_{k}"] = max(0.0, lhs) / scale
    norm_lhs = tr(h_mat, v_bar) + t * ch.noise_user_w
    checks["normalization"] = abs(norm_lhs - 1.0) / (
        np.linalg.norm(h_mat) * nv + t * ch.noise_user_w + 1.0
    )
    total = float(np.real(np.trace(w_bar) + np.trace(v_bar)))
    checks["power"] = max(0.0, total - t * ch.power_budget_w) / (
        total + t * ch.power_budget_w
    )
    sensed = tr(q, w_bar + v_bar)
    checks["sensing"] = max(0.0, t * c_s - sensed) / (
        np.linalg.norm(q) * (nw + nv) + t * c_s
    )
    ew = np.linalg.eigvalsh(w_bar)
    ev = np.linalg.eigvalsh(v_bar)
    top = max(ew[-1], ev[-1], 1e-300)
    checks["w_psd"] = max(0.0, -ew[0]) / top
    checks["v_psd"] = max(0.0, -ev[0]) / top
    return checks


def _numerical_rank(mat: np.ndarray) -> int:
    ev = np.linalg.eigvalsh(mat)
    if ev[-1] <= 0:
        return 0
    return int(np.sum(ev > RANK_TOL * ev[-1]))


def max_an_rank(scenario: ScenarioConfig) -> int:
    """Rank bound min(K, N_t) on the AN covariance of any optimal design."""
    return min(scenario.prior.k, scenario.array.n_tx)


def _purify_an(v_bar: np.ndarray, max_rank: int) -> tuple[np.ndarray, float]:
    """Keep the ``max_rank`` strongest eigenpairs of V_bar.

    Every optimal V lies in the null space of B*, whose dimension is at most
    ``max_rank``; anything outside the strongest eigenpairs is interior-point
    residue. Returns the projected matrix and the dropped trace over ||V_bar||_F.
    """
    ev, uv = np.linalg.eigh(v_bar)
    if ev[-1] <= 0 or int(np.sum(ev > RANK_TOL * ev[-1])) <= max_rank:
        return v_bar, 0.0
    cut = ev.size - max_rank
    u = uv[:, cut:]
    purified = (u * ev[cut:]) @ u.conj().T
    dropped = float(np.sum(np.abs(ev[:cut]))) / float(np.linalg.norm(v_bar))
    logger.debug(
        "Purified V_bar from rank %d to %d, dropped %.3g of its norm",
        int(np.sum(ev > RANK_TOL * ev[-1])),
        max_rank,
        dropped,
    )
    return 0.5 * (purified + purified.conj().T), dropped


def reconstruct_rank_one(
    result: InnerSolveResult,
    scenario: ScenarioConfig,
    tol: float = CERTIFICATE_TOL,
) -> tuple[np.ndarray, np.ndarray, float, ReconstructionReport]:
    """Move the excess rank of W* into V* without losing optimality.

    Projects W* off the null space Z of D* = -lambda H - sum beta_k A_k +
    psi Q_bar - rho I. The null space starts at the eigenvalues of -D* below
    ``RANK_TOL`` times the dual scale and grows one eigenvector at a time (up
    to ``NULL_SPACE_MAX``) until the projected W is rank one. V_bar is then
    purified to at most min(K, N_t) eigenpairs before every row is re-checked.

    Raises:
        CertificateError: W_bar is not rank one, V_bar exceeds the rank bound or a
            re-feasibility check fails.
    """
    if not result.optimal or result.duals is None:
        raise InvalidInputError(f"cannot reconstruct from a {result.status} inner solve")
    d = result.duals
    n = scenario.array.n_tx
    eye = np.eye(n)
    sum_a = sum(b * a for b, a in zip(d.beta, scenario.a_matrices))
    d_star = -d.lam * scenario.h_matrix - sum_a + d.psi * scenario.qbar.matrix - d.rho * eye
    evals, evecs = np.linalg.eigh(-0.5 * (d_star + d_star.conj().T))
    scale = _dual_scale(result, scenario)

    def project(dim: int) -> np.ndarray:
        z = evecs[:, :dim]
        p = eye - z @ z.conj().T
        w_bar = p @ result.W @ p
        return 0.5 * (w_bar + w_bar.conj().T)

    null_dim = int(np.sum(evals <= RANK_TOL * scale))
    w_bar = project(null_dim)
    ratio = _rank_ratio(w_bar)
    while ratio > RANK_ONE_TOL and null_dim < n - 1 and evals[null_dim] <= NULL_SPACE_MAX * scale:
        null_dim += 1
        w_bar = project(null_dim)
        ratio = _rank_ratio(w_bar)

    v_bar = result.V + (result.W - w_bar)
    v_bar = 0.5 * (v_bar + v_bar.conj().T)
    an_bound = max_an_rank(scenario)
    v_bar, an_dropped = _purify_an(v_bar, an_bound)
    an_rank = _numerical_rank(v_bar)
    checks = _recheck(result, scenario, w_bar, v_bar)
    checks["rank_one"] = ratio
    before = float(np.real(np.trace(result.W) + np.trace(result.V)))
    after = float(np.real(np.trace(w_bar) + np.trace(v_bar)))
    trace_err = abs(after - before) / max(before, 1e-300)

    violations = []
    if ratio > RANK_ONE_TOL:
        violations.append(f"W_bar is not rank one: lambda2/lambda1={ratio:.3g}")
    if an_rank > an_bound:
        violations.append(f"V_bar has rank {an_rank}, above the bound {an_bound}")
    for name, value in checks.items():
        if name != "rank_one" and value > tol:
            violations.append(f"{name} check {value:.3g} exceeds {tol:g}")
    report = ReconstructionReport(
        null_dim=null_dim,
        rank_ratio=ratio,
        checks=checks,
        trace_total_error=trace_err,
        violations=violations,
        an_rank=an_rank,
        an_dropped=an_dropped,
    )
    if violations:
        raise CertificateError(
            f"rank-one reconstruction failed at gamma={result.gamma:.4g}: "
            + "; ".join(violations),
            report,
        )
    return w_bar, v_bar, result.t, report


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate so the largest-magnitude entry is real positive."""
    idx = int(np.argmax(np.abs(v)))
    mag = abs(v[idx])
    if mag == 0:
        return v
    return v * (np.conj(v[idx]) / mag)


def extract_beams(
    w_bar: np.ndarray,
    v_bar: np.ndarray,
    t_bar: float,
    max_an_beams: int | None = None,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Factor W_bar/t_bar = w w^H and V_bar/t_bar = sum_k v_k v_k^H.

    Raises:
        CertificateError: V_bar needs more than ``max_an_beams`` beams.
    """
    ew, uw = np.linalg.eigh(np.asarray(w_bar) / t_bar)
    w = _fix_phase(math.sqrt(max(ew[-1], 0.0)) * uw[:, -1])

    ev, uv = np.linalg.eigh(np.asarray(v_bar) / t_bar)
    vs: list[np.ndarray] = []
    if ev[-1] > 0:
        keep = [i for i in range(ev.size - 1, -1, -1) if ev[i] > RANK_TOL * ev[-1]]
        if max_an_beams is not None and len(keep) > max_an_beams:
            raise CertificateError(
                f"AN covariance has rank {len(keep)}, more than {max_an_beams} beams"
            )
        vs = [_fix_phase(math.sqrt(ev[i]) * uv[:, i]) for i in keep]
    return w, vs


def _gamma_grid(scenario: ScenarioConfig, cfg: GammaSearchConfig) -> np.ndarray:
    gamma_max = cfg.gamma_max if cfg.gamma_max is not None else scenario.eve_sinr_bound
    if gamma_max < 10.0 * cfg.gamma_min:
        gamma_max = 10.0 * cfg.gamma_min
    return np.geomspace(cfg.gamma_min, gamma_max, cfg.grid_points)


def _evaluate(
    gamma: float,
    scenario: ScenarioConfig,
    settings: SolverSettings | None,
    include_an: bool,
) -> GammaPoint:
    try:
        res = solve_inner(gamma, scenario, settings, include_an)
    except NumericalError as exc:
        logger.warning("Inner solve failed at gamma=%.4g: %s", gamma, exc)
        return GammaPoint(gamma, math.nan, math.nan, sdp_solver.NUMERICAL_FAILURE)
    if not res.optimal:
        return GammaPoint(gamma, math.nan, math.nan, res.status, res)
    rate = math.log2((1.0 + res.f_gamma) / (1.0 + gamma))
    return GammaPoint(gamma, res.f_gamma, rate, res.status, res)


def sweep_gamma(
    scenario: ScenarioConfig,
    search_cfg: GammaSearchConfig | None = None,
    settings: SolverSettings | None = None,
    include_an: bool = True,
) -> list[GammaPoint]:
    """Evaluate g(gamma) on the log grid; points come back in grid order."""
    cfg = search_cfg or GammaSearchConfig()
    grid = _gamma_grid(scenario, cfg)

    def run(gamma: float) -> GammaPoint:
        return _evaluate(float(gamma), scenario, settings, include_an)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(run, grid))
    return [run(g) for g in grid]


def _golden_refine(
    lo: float,
    hi: float,
    iterations: int,
    scenario: ScenarioConfig,
    settings: SolverSettings | None,
    include_an: bool,
) -> list[GammaPoint]:
    """Golden-section search of g over log(gamma) in [lo, hi]."""
    evaluated: list[GammaPoint] = []

    def g(log_gamma: float) -> float:
        point = _evaluate(math.exp(log_gamma), scenario, settings, include_an)
        evaluated.append(point)
        return point.score

    if iterations <= 0:
        return evaluated
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = g(c), g(d)
    for _ in range(max(iterations - 2, 0)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = g(d)
    return evaluated


def feasibility_probe(scenario: ScenarioConfig) -> FeasibilityReport:
    """Can any covariance within the power budget meet the sensing requirement?"""
    max_lhs = scenario.channels.power_budget_w * scenario.qbar.lambda_max
    required = scenario.sensing_rhs_coeff
    vacuous = scenario.sensing_vacuous
    return FeasibilityReport(
        feasible=vacuous or max_lhs >= required,
        max_lhs=max_lhs,
        required_rhs=required,
        vacuous=vacuous,
    )


def locate_optimum(
    scenario: ScenarioConfig,
    cfg: GammaSearchConfig,
    settings: SolverSettings | None = None,
    include_an: bool = True,
) -> tuple[GammaPoint, list[GammaPoint], list[GammaPoint]]:
    """Grid sweep then golden-section refinement; returns (best, grid points, refined points)."""
    points = sweep_gamma(scenario, cfg, settings, include_an)
    if not any(p.status == sdp_solver.OPTIMAL for p in points):
        probe = feasibility_probe(scenario)
        raise InfeasibleScenarioError(
            f"no feasible gamma for Gamma={scenario.pcrb_threshold:.4g} "
            f"(need tr(Q R) >= {probe.required_rhs:.4g}, at most {probe.max_lhs:.4g})",
            probe=probe,
            points=points,
        )
    i = int(np.argmax([p.score for p in points]))
    lo = points[max(i - 1, 0)].gamma
    hi = points[min(i + 1, len(points) - 1)].gamma
    refined = _golden_refine(lo, hi, cfg.refine_iterations, scenario, settings, include_an)
    best = max(points + refined, key=lambda p: p.score)
    logger.debug(
        "Best gamma=%.6g g=%.6g after %d refinements", best.gamma, best.secrecy_rate, len(refined)
    )
    return best, points, refined


def _clip_power(w: np.ndarray, vs: list[np.ndarray], budget: float):
    used = power_split(w, vs).total
    if used <= budget:
        return w, vs
    shrink = math.sqrt(budget / used)
    return w * shrink, [v * shrink for v in vs]


def _certified_reconstruction(
    result: InnerSolveResult,
    scenario: ScenarioConfig,
    settings: SolverSettings | None,
):
    try:
        return result, reconstruct_rank_one(result, scenario)
    except CertificateError as exc:
        logger.warning("%s; retrying with tighter solver tolerances", exc)
    tighter = (settings or SolverSettings()).tightened()
    retry = solve_inner(result.gamma, scenario, tighter, include_an=True)
    if not retry.optimal:
        raise CertificateError(
            f"tightened inner solve returned {retry.status} at gamma={result.gamma:.4g}"
        )
    return retry, reconstruct_rank_one(retry, scenario)


def search_gamma(
    scenario: ScenarioConfig,
    search_cfg: GammaSearchConfig | None = None,
    settings: SolverSettings | None = None,
) -> BeamformingSolution:
    """Maximize log2((1 + f(gamma)) / (1 + gamma)) and return certified beams.

    Raises:
        InfeasibleScenarioError: every grid point is infeasible.
        CertificateError: rank-one recovery fails even after a tightened retry.
    """
    cfg = search_cfg or GammaSearchConfig()
    best, points, refined = locate_optimum(scenario, cfg, settings, include_an=True)
    inner, (w_bar, v_bar, t_bar, report) = _certified_reconstruction(
        best.result, scenario, settings
    )
    w, vs = extract_beams(w_bar, v_bar, t_bar, max_an_beams=max_an_rank(scenario))
    w, vs = _clip_power(w, vs, scenario.channels.power_budget_w)
    ch = scenario.channels
    pcrb = pcrb_closed_form(w, vs, ch.beta_min_abs, scenario.qbar, scenario.prior, ch)
    rate = max(0.0, math.log2((1.0 + inner.f_gamma) / (1.0 + inner.gamma)))
    logger.info(
        "Gamma=%.4g: gamma*=%.6g secrecy rate %.6g bit/s/Hz",
        scenario.pcrb_threshold,
        inner.gamma,
        rate,
    )
    return BeamformingSolution(
        w=w,
        an_beams=vs,
        gamma_star=inner.gamma,
        secrecy_rate=rate,
        pcrb_value=pcrb,
        power_used=power_split(w, vs).total,
        feasible=True,
        scheme="proposed",
        reconstruction=report,
        kkt=kkt_report(inner, scenario),
        inner=inner,
        points=points,
        refined_points=refined,
    )


def benchmark_mrt(scenario: ScenarioConfig) -> BeamformingSolution:
    """Maximum-ratio transmission toward the user with the full budget and no AN."""
    ch = scenario.channels
    h = ch.user_channel
    w = math.sqrt(ch.power_budget_w) * h / np.linalg.norm(h)
    report = secrecy_report(w, [], scenario)
    pcrb = pcrb_closed_form(w, [], ch.beta_min_abs, scenario.qbar, scenario.prior, ch)
    return BeamformingSolution(
        w=w,
        an_beams=[],
        gamma_star=max(report.sinr_eve),
        secrecy_rate=report.worst_case_rate,
        pcrb_value=pcrb,
        power_used=power_split(w, []).total,
        feasible=sensing_feasible(w, [], scenario),
        scheme="mrt",
    )


def benchmark_no_an(
    scenario: ScenarioConfig,
    search_cfg: GammaSearchConfig | None = None,
    settings: SolverSettings | None = None,
) -> BeamformingSolution:
    """Same gamma search with the AN block removed.

    Without V there is nothing to absorb excess rank, so a non-rank-one W*
    falls back to its dominant eigenvector and the result is flagged
    ``suboptimal``.
    """
    cfg = search_cfg or GammaSearchConfig()
    best, points, refined = locate_optimum(scenario, cfg, settings, include_an=False)
    inner = best.result
    ch = scenario.channels
    ratio = _rank_ratio(inner.W)
    ew, uw = np.linalg.eigh(inner.W / inner.t)
    w = _fix_phase(math.sqrt(max(ew[-1], 0.0)) * uw[:, -1])
    w, _ = _clip_power(w, [], ch.power_budget_w)
    suboptimal = ratio > RANK_ONE_TOL
    if suboptimal:
        logger.warning(
            "No-AN optimum is not rank one (lambda2/lambda1=%.3g); using its dominant eigenvector",
            ratio,
        )
        rate = secrecy_report(w, [], scenario).worst_case_rate
    else:
        rate = max(0.0, best.secrecy_rate)
    pcrb = pcrb_closed_form(w, [], ch.beta_min_abs, scenario.qbar, scenario.prior, ch)
    return BeamformingSolution(
        w=w,
        an_beams=[],
        gamma_star=inner.gamma,
        secrecy_rate=rate,
        pcrb_value=pcrb,
        power_used=power_split(w, []).total,
        feasible=sensing_feasible(w, [], scenario) or not suboptimal,
        scheme="no_an",
        suboptimal=suboptimal,
        kkt=kkt_report(inner, scenario),
        inner=inner,
        points=points,
        refined_points=refined,
    )
