"""Small dense semidefinite programs with complex Hermitian PSD blocks.

Problems are stated as maximizations::

    max  sum_b <C_b, X_b> + c_s . s
    s.t. sum_b <A_ib, X_b> + a_is . s  (=, <=, >=)  b_i
         X_b Hermitian PSD, s >= 0

Complex blocks are realified, inequality rows get slack columns, and the
resulting standard-form conic program is solved with a homogeneous
self-dual embedding, Nesterov-Todd scaling and Mehrotra predictor-corrector
steps. Solver outcomes are reported through ``SdpSolution.status``; only
malformed input raises.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import linalg

from isacbeam.errors import InvalidInputError

logger = logging.getLogger(__name__)

Sense = Literal["EQ", "LE", "GE"]
VALID_SENSES: set[str] = {"EQ", "LE", "GE"}

Status = Literal["OPTIMAL", "INFEASIBLE", "UNBOUNDED", "NUMERICAL_FAILURE"]
OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"
NUMERICAL_FAILURE = "NUMERICAL_FAILURE"

HERMITIAN_TOL = 1e-12

# Steps shorter than this mean the iterates are stuck against the cone boundary.
MIN_STEP = 1e-12


@dataclass
class Constraint:
    """One linear row over the PSD blocks and the scalar variables.

    ``blocks`` holds one coefficient matrix per PSD block; ``None`` means zero.
    """

    blocks: list[np.ndarray | None]
    scalars: np.ndarray | list[float] | None
    rhs: float
    sense: Sense = "EQ"
    name: str = ""


@dataclass
class SdpProblem:
    """Maximization over Hermitian PSD blocks and nonnegative scalars."""

    psd_blocks: list[int]
    scalar_count: int
    objective_blocks: list[np.ndarray | None]
    objective_scalars: np.ndarray | list[float] | None
    constraints: list[Constraint]

    def block_coefficient(self, row: Constraint | None, j: int) -> np.ndarray:
        """Dense complex coefficient of block ``j`` (objective when ``row`` is None)."""
        source = self.objective_blocks if row is None else row.blocks
        mat = source[j] if j < len(source) else None
        n = self.psd_blocks[j]
        if mat is None:
            return np.zeros((n, n), dtype=complex)
        return np.asarray(mat, dtype=complex)

    def scalar_coefficients(self, row: Constraint | None) -> np.ndarray:
        """Scalar-variable coefficients of ``row``, or of the objective for None."""
        raw = self.objective_scalars if row is None else row.scalars
        if raw is None:
            return np.zeros(self.scalar_count)
        return np.asarray(raw, dtype=float).reshape(-1)

    def validate(self) -> list[str]:
        """Return list of structural problems, empty if the problem is well formed."""
        errors = []
        if any(int(n) != n or n < 1 for n in self.psd_blocks):
            errors.append("psd block dimensions must be positive integers")
            return errors
        if self.scalar_count < 0:
            errors.append("scalar_count must be >= 0")
        if not self.psd_blocks and self.scalar_count == 0:
            errors.append("problem has no variables")
        if not self.constraints:
            errors.append("problem has no constraints")

        rows: list[tuple[str, Constraint | None]] = [("objective", None)]
        rows += [(c.name or f"constraint {i}", c) for i, c in enumerate(self.constraints)]
        for label, row in rows:
            source = self.objective_blocks if row is None else row.blocks
            if len(source) != len(self.psd_blocks):
                errors.append(
                    f"{label}: {len(source)} block coefficients for {len(self.psd_blocks)} blocks"
                )
                continue
            for j, n in enumerate(self.psd_blocks):
                mat = self.block_coefficient(row, j)
                if mat.shape != (n, n):
                    errors.append(f"{label}: block {j} has shape {mat.shape}, expected {(n, n)}")
                elif not _is_hermitian(mat):
                    errors.append(f"{label}: block {j} coefficient is not Hermitian")
            if self.scalar_coefficients(row).shape != (self.scalar_count,):
                errors.append(f"{label}: expected {self.scalar_count} scalar coefficients")
            if row is not None:
                if row.sense not in VALID_SENSES:
                    errors.append(f"{label}: unknown sense {row.sense!r}")
                if not np.isfinite(row.rhs):
                    errors.append(f"{label}: rhs is not finite")
        if errors:
            return errors

        # Every variable must appear in some row, otherwise the objective may be free.
        for j in range(len(self.psd_blocks)):
            if not any(np.any(self.block_coefficient(c, j)) for c in self.constraints):
                errors.append(f"block {j} appears in no constraint")
        used = np.zeros(self.scalar_count, dtype=bool)
        for c in self.constraints:
            used |= self.scalar_coefficients(c) != 0
        for s in np.flatnonzero(~used):
            errors.append(f"scalar {s} appears in no constraint")
        return errors


@dataclass(frozen=True)
class SolverSettings:
    """Interior-point tolerances and limits."""

    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    debug_dump: Path | None = None

    def tightened(self, factor: float = 1e-2) -> SolverSettings:
        """Copy with both tolerances multiplied by ``factor``."""
        return dataclasses.replace(
            self, gap_tol=self.gap_tol * factor, feas_tol=self.feas_tol * factor
        )


@dataclass
class SdpSolution:
    """Primal-dual answer in the complex formulation.

    Multipliers follow the maximization Lagrangian: free for ``EQ`` rows and
    nonnegative for ``LE`` and ``GE`` rows. ``gap`` and the residuals are the
    relative measures the solver terminated on.
    """

    status: Status
    primal_blocks: list[np.ndarray] = field(default_factory=list)
    primal_scalars: np.ndarray = field(default_factory=lambda: np.zeros(0))
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = math.nan
    dual_objective: float = math.nan
    gap: float = math.nan
    primal_residual: float = math.nan
    dual_residual: float = math.nan
    iterations: int = 0
    dual_blocks: list[np.ndarray] = field(default_factory=list)
    dual_scalars: np.ndarray = field(default_factory=lambda: np.zeros(0))
    certificate: dict | None = None
    condition: float | None = None
    message: str = ""

    @property
    def optimal(self) -> bool:
        """True when the solver stopped on the optimality tolerances."""
        return self.status == OPTIMAL


@dataclass
class CertificateReport:
    """Optimality measures recomputed from the problem data and a solution."""

    gap: float
    primal_residual: float
    dual_residual: float
    primal_min_eigs: list[float]
    dual_min_eigs: list[float]
    scalar_min: float
    dual_scalar_min: float
    complementarity: list[float]
    multiplier_signs_ok: bool
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """True when no certificate check failed."""
        return not self.violations


def _is_hermitian(mat: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
    return bool(np.max(np.abs(mat - mat.conj().T), initial=0.0) <= HERMITIAN_TOL * scale)


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]]."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {h.shape}")
    if not _is_hermitian(h):
        raise InvalidInputError("matrix is not Hermitian")
    re, im = h.real, h.imag
    out = np.block([[re, -im], [im, re]])
    return 0.5 * (out + out.T)


def unembed_symmetric(y: np.ndarray) -> np.ndarray:
    """Hermitian matrix whose embedding pairs with ``y`` like the original blocks.

    For any real symmetric PSD ``y`` the result is Hermitian PSD and
    <A, result> = <embed(A), y> / 2.
    """
    n = y.shape[0] // 2
    y11, y12 = y[:n, :n], y[:n, n:]
    y21, y22 = y[n:, :n], y[n:, n:]
    out = 0.5 * (y11 + y22) + 0.5j * (y21 - y12)
    return 0.5 * (out + out.conj().T)


@dataclass
class _ConicForm:
    """Equilibrated real standard form: min <c, x> s.t. A x = b, x in K."""

    dims: list[int]
    a_blocks: list[np.ndarray]
    a_lp: np.ndarray
    b: np.ndarray
    c_blocks: list[np.ndarray]
    c_lp: np.ndarray
    row_scale: np.ndarray
    obj_scale: float
    n_user_scalars: int

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def nu(self) -> int:
        return sum(self.dims) + self.a_lp.shape[1]

    def apply_a(self, xs: list[np.ndarray], x: np.ndarray) -> np.ndarray:
        out = self.a_lp @ x
        for a, mat in zip(self.a_blocks, xs):
            out = out + np.einsum("mij,ij->m", a, mat)
        return out

    def apply_at(self, y: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        return [np.einsum("m,mij->ij", y, a) for a in self.a_blocks], self.a_lp.T @ y

    def c_dot(self, xs: list[np.ndarray], x: np.ndarray) -> float:
        return _inner(self.c_blocks, self.c_lp, xs, x)


def _inner(xs, x, zs, z) -> float:
    return float(sum(np.sum(a * b) for a, b in zip(xs, zs)) + x @ z)


def _conic_form(problem: SdpProblem) -> _ConicForm:
    m = len(problem.constraints)
    n_slack = sum(1 for c in problem.constraints if c.sense != "EQ")
    n_lp = problem.scalar_count + n_slack
    dims = [2 * n for n in problem.psd_blocks]
    a_blocks = [np.zeros((m, d, d)) for d in dims]
    a_lp = np.zeros((m, n_lp))
    b = np.zeros(m)
    col = problem.scalar_count
    for i, con in enumerate(problem.constraints):
        for j in range(len(dims)):
            a_blocks[j][i] = 0.5 * embed_hermitian(problem.block_coefficient(con, j))
        a_lp[i, : problem.scalar_count] = problem.scalar_coefficients(con)
        if con.sense == "LE":
            a_lp[i, col] = 1.0
            col += 1
        elif con.sense == "GE":
            a_lp[i, col] = -1.0
            col += 1
        b[i] = con.rhs
    c_blocks = [
        -0.5 * embed_hermitian(problem.block_coefficient(None, j)) for j in range(len(dims))
    ]
    c_lp = np.concatenate([-problem.scalar_coefficients(None), np.zeros(n_slack)])

    sq = np.sum(a_lp**2, axis=1) + b**2
    for a in a_blocks:
        sq = sq + np.einsum("mij,mij->m", a, a)
    row_scale = np.sqrt(sq)
    row_scale[row_scale == 0] = 1.0
    a_blocks = [a / row_scale[:, None, None] for a in a_blocks]
    a_lp = a_lp / row_scale[:, None]
    b = b / row_scale

    obj_scale = math.sqrt(sum(float(np.sum(c**2)) for c in c_blocks) + float(c_lp @ c_lp))
    if obj_scale == 0.0:
        obj_scale = 1.0
    c_blocks = [c / obj_scale for c in c_blocks]
    c_lp = c_lp / obj_scale
    return _ConicForm(
        dims=dims,
        a_blocks=a_blocks,
        a_lp=a_lp,
        b=b,
        c_blocks=c_blocks,
        c_lp=c_lp,
        row_scale=row_scale,
        obj_scale=obj_scale,
        n_user_scalars=problem.scalar_count,
    )


@dataclass
class _Iterate:
    xs: list[np.ndarray]
    x: np.ndarray
    y: np.ndarray
    zs: list[np.ndarray]
    z: np.ndarray
    tau: float
    kappa: float

    @classmethod
    def start(cls, form: _ConicForm) -> _Iterate:
        n_lp = form.a_lp.shape[1]
        return cls(
            xs=[np.eye(d) for d in form.dims],
            x=np.ones(n_lp),
            y=np.zeros(form.m),
            zs=[np.eye(d) for d in form.dims],
            z=np.ones(n_lp),
            tau=1.0,
            kappa=1.0,
        )

    def mu(self, nu: int) -> float:
        return (_inner(self.xs, self.x, self.zs, self.z) + self.tau * self.kappa) / (nu + 1)

    def moved(self, d: _Direction, alpha: float) -> _Iterate:
        return _Iterate(
            xs=[_sym(x + alpha * dx) for x, dx in zip(self.xs, d.xs)],
            x=self.x + alpha * d.x,
            y=self.y + alpha * d.y,
            zs=[_sym(z + alpha * dz) for z, dz in zip(self.zs, d.zs)],
            z=self.z + alpha * d.z,
            tau=self.tau + alpha * d.tau,
            kappa=self.kappa + alpha * d.kappa,
        )


@dataclass
class _Direction:
    xs: list[np.ndarray]
    x: np.ndarray
    y: np.ndarray
    zs: list[np.ndarray]
    z: np.ndarray
    tau: float
    kappa: float


@dataclass
class _Residuals:
    r_p: np.ndarray
    rd_blocks: list[np.ndarray]
    rd_lp: np.ndarray
    r_g: float
    pres: float
    dres: float
    relgap: float
    pobj: float
    dobj: float


@dataclass
class _Scaling:
    """Nesterov-Todd scaling W = G G^T with G^T Z G = G^-1 X G^-T = diag(d)."""

    lx: list[np.ndarray]
    lz: list[np.ndarray]
    g: list[np.ndarray]
    g_inv: list[np.ndarray]
    w: list[np.ndarray]
    d: list[np.ndarray]
    w_lp: np.ndarray

    def apply(self, mats: list[np.ndarray], vec: np.ndarray):
        """Return (W M W for each block, w * v for the LP part)."""
        return [w @ mat @ w for w, mat in zip(self.w, mats)], self.w_lp * vec


def _sym(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _residuals(form: _ConicForm, it: _Iterate) -> _Residuals:
    at_blocks, at_lp = form.apply_at(it.y)
    r_p = form.b * it.tau - form.apply_a(it.xs, it.x)
    rd_blocks = [c * it.tau - at - z for c, at, z in zip(form.c_blocks, at_blocks, it.zs)]
    rd_lp = form.c_lp * it.tau - at_lp - it.z
    cx = form.c_dot(it.xs, it.x)
    by = float(form.b @ it.y)
    r_g = by - cx - it.kappa

    norm_b = float(np.linalg.norm(form.b))
    norm_c = math.sqrt(
        sum(float(np.sum(c**2)) for c in form.c_blocks) + float(form.c_lp @ form.c_lp)
    )
    norm_rd = math.sqrt(sum(float(np.sum(r**2)) for r in rd_blocks) + float(rd_lp @ rd_lp))
    pobj = cx / it.tau
    dobj = by / it.tau
    return _Residuals(
        r_p=r_p,
        rd_blocks=rd_blocks,
        rd_lp=rd_lp,
        r_g=r_g,
        pres=float(np.linalg.norm(r_p)) / it.tau / (1.0 + norm_b),
        dres=norm_rd / it.tau / (1.0 + norm_c),
        relgap=abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj)),
        pobj=pobj,
        dobj=dobj,
    )


def _infeasibility_status(form: _ConicForm, it: _Iterate, tol: float) -> Status | None:
    by = float(form.b @ it.y)
    if by > 0:
        at_blocks, at_lp = form.apply_at(it.y)
        ray = math.sqrt(
            sum(float(np.sum((at + z) ** 2)) for at, z in zip(at_blocks, it.zs))
            + float(np.sum((at_lp + it.z) ** 2))
        )
        if ray / by <= tol:
            return INFEASIBLE
    cx = form.c_dot(it.xs, it.x)
    if cx < 0:
        ax = float(np.linalg.norm(form.apply_a(it.xs, it.x)))
        if ax / -cx <= tol:
            return UNBOUNDED
    return None


def _nt_scaling(it: _Iterate) -> _Scaling:
    lx, lz, gs, g_invs, ws, ds = [], [], [], [], [], []
    for x, z in zip(it.xs, it.zs):
        l_x = linalg.cholesky(x, lower=True)
        l_z = linalg.cholesky(z, lower=True)
        u, s, vt = linalg.svd(l_z.T @ l_x)
        del u
        root = np.sqrt(s)
        g = l_x @ vt.T / root
        lx_inv = linalg.solve_triangular(l_x, np.eye(x.shape[0]), lower=True)
        g_inv = (root[:, None] * vt) @ lx_inv
        lx.append(l_x)
        lz.append(l_z)
        gs.append(g)
        g_invs.append(g_inv)
        ws.append(g @ g.T)
        ds.append(s)
    return _Scaling(lx=lx, lz=lz, g=gs, g_inv=g_invs, w=ws, d=ds, w_lp=it.x / it.z)


def _schur_matrix(form: _ConicForm, sc: _Scaling) -> np.ndarray:
    m = form.m
    mat = (form.a_lp * sc.w_lp) @ form.a_lp.T
    for a, w in zip(form.a_blocks, sc.w):
        waw = np.einsum("ab,mbc,cd->mad", w, a, w)
        mat = mat + np.einsum("iab,jab->ij", waw, a)
    return 0.5 * (mat + mat.T) if m else mat


def _direction(
    form: _ConicForm,
    it: _Iterate,
    sc: _Scaling,
    factor,
    res: _Residuals,
    rx_blocks: list[np.ndarray],
    rx_lp: np.ndarray,
    r_tau: float,
    eta: float,
) -> _Direction:
    wcw_blocks, wcw_lp = sc.apply(form.c_blocks, form.c_lp)
    f = form.apply_a(wcw_blocks, wcw_lp)
    h0 = form.c_dot(wcw_blocks, wcw_lp)
    v = linalg.cho_solve(factor, f + form.b)

    wrw_blocks, wrw_lp = sc.apply(res.rd_blocks, res.rd_lp)
    r1 = (
        eta * res.r_p
        - form.apply_a(rx_blocks, rx_lp)
        + eta * form.apply_a(wrw_blocks, wrw_lp)
    )
    r2 = (
        -eta * res.r_g
        + form.c_dot(rx_blocks, rx_lp)
        - eta * form.c_dot(wrw_blocks, wrw_lp)
        + r_tau / it.tau
    )
    u = linalg.cho_solve(factor, r1)
    bf = form.b - f
    denom = float(bf @ v) + h0 + it.kappa / it.tau
    d_tau = (r2 - float(bf @ u)) / denom
    d_y = u + d_tau * v

    at_blocks, at_lp = form.apply_at(d_y)
    dz_blocks = [
        c * d_tau - at + eta * rd for c, at, rd in zip(form.c_blocks, at_blocks, res.rd_blocks)
    ]
    dz_lp = form.c_lp * d_tau - at_lp + eta * res.rd_lp
    wdw_blocks, wdw_lp = sc.apply(dz_blocks, dz_lp)
    dx_blocks = [_sym(rx - wdw) for rx, wdw in zip(rx_blocks, wdw_blocks)]
    dx_lp = rx_lp - wdw_lp
    d_kappa = (r_tau - it.kappa * d_tau) / it.tau
    return _Direction(
        xs=dx_blocks,
        x=dx_lp,
        y=d_y,
        zs=[_sym(dz) for dz in dz_blocks],
        z=dz_lp,
        tau=d_tau,
        kappa=d_kappa,
    )


def _psd_step(chol: np.ndarray, dmat: np.ndarray) -> float:
    """Largest alpha keeping L L^T + alpha dM PSD."""
    half = linalg.solve_triangular(chol, dmat, lower=True)
    t = linalg.solve_triangular(chol, half.T, lower=True)
    lam = float(np.linalg.eigvalsh(_sym(t))[0])
    return math.inf if lam >= 0 else -1.0 / lam


def _ratio_step(vals: np.ndarray, dvals: np.ndarray) -> float:
    neg = dvals < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-vals[neg] / dvals[neg]))


def _max_step(it: _Iterate, sc: _Scaling, d: _Direction) -> float:
    alpha = math.inf
    for l_x, dx in zip(sc.lx, d.xs):
        alpha = min(alpha, _psd_step(l_x, dx))
    for l_z, dz in zip(sc.lz, d.zs):
        alpha = min(alpha, _psd_step(l_z, dz))
    alpha = min(alpha, _ratio_step(it.x, d.x), _ratio_step(it.z, d.z))
    alpha = min(
        alpha,
        _ratio_step(np.array([it.tau, it.kappa]), np.array([d.tau, d.kappa])),
    )
    return alpha


def _corrector_block(
    sc: _Scaling, j: int, dx_aff: np.ndarray, dz_aff: np.ndarray, sigma_mu: float
) -> np.ndarray:
    g, g_inv, d = sc.g[j], sc.g_inv[j], sc.d[j]
    dx_t = g_inv @ dx_aff @ g_inv.T
    dz_t = g.T @ dz_aff @ g
    rc = sigma_mu * np.eye(d.size) - np.diag(d**2) - _sym(dx_t @ dz_t)
    u = 2.0 * rc / (d[:, None] + d[None, :])
    return _sym(g @ u @ g.T)


def _finish(
    problem: SdpProblem,
    form: _ConicForm,
    it: _Iterate,
    res: _Residuals | None,
    status: Status,
    iterations: int,
    message: str = "",
    condition: float | None = None,
) -> SdpSolution:
    if status in (INFEASIBLE, UNBOUNDED):
        return _ray_solution(problem, form, it, status, iterations)

    tau = it.tau
    y_int = form.obj_scale * (it.y / tau) / form.row_scale
    y_max = -y_int
    multipliers = np.array(
        [-y if c.sense == "GE" else y for y, c in zip(y_max, problem.constraints)]
    )
    blocks = [unembed_symmetric(x / tau) for x in it.xs]
    scalars = it.x[: form.n_user_scalars] / tau
    objective = sum(
        float(np.real(np.trace(problem.block_coefficient(None, j) @ blk)))
        for j, blk in enumerate(blocks)
    ) + float(problem.scalar_coefficients(None) @ scalars)
    rhs = np.array([c.rhs for c in problem.constraints])
    dual_blocks, dual_scalars = _dual_slack(problem, y_max)
    return SdpSolution(
        status=status,
        primal_blocks=blocks,
        primal_scalars=scalars,
        multipliers=multipliers,
        objective=objective,
        dual_objective=float(y_max @ rhs),
        gap=res.relgap if res is not None else math.nan,
        primal_residual=res.pres if res is not None else math.nan,
        dual_residual=res.dres if res is not None else math.nan,
        iterations=iterations,
        dual_blocks=dual_blocks,
        dual_scalars=dual_scalars,
        condition=condition,
        message=message,
    )


def _ray_solution(
    problem: SdpProblem, form: _ConicForm, it: _Iterate, status: Status, iterations: int
) -> SdpSolution:
    if status == INFEASIBLE:
        ray = -it.y / form.row_scale
        ray = ray / max(float(np.linalg.norm(ray)), 1e-300)
        certificate = {"dual_ray": ray}
        message = "primal infeasible: dual ray certifies b^T y > 0 with A^T y + Z = 0"
    else:
        blocks = [unembed_symmetric(x) for x in it.xs]
        scalars = it.x[: form.n_user_scalars]
        norm = math.sqrt(
            sum(float(np.sum(np.abs(b) ** 2)) for b in blocks) + float(scalars @ scalars)
        )
        norm = max(norm, 1e-300)
        certificate = {
            "primal_ray_blocks": [b / norm for b in blocks],
            "primal_ray_scalars": scalars / norm,
        }
        message = "dual infeasible: primal ray improves the objective without bound"
    return SdpSolution(
        status=status,
        iterations=iterations,
        certificate=certificate,
        message=message,
    )


def _dual_slack(problem: SdpProblem, y_max: np.ndarray):
    blocks = []
    for j in range(len(problem.psd_blocks)):
        z = -problem.block_coefficient(None, j)
        for y, con in zip(y_max, problem.constraints):
            z = z + y * problem.block_coefficient(con, j)
        blocks.append(0.5 * (z + z.conj().T))
    scalars = -problem.scalar_coefficients(None)
    for y, con in zip(y_max, problem.constraints):
        scalars = scalars + y * problem.scalar_coefficients(con)
    return blocks, scalars


def _row_multipliers(problem: SdpProblem, solution: SdpSolution) -> np.ndarray:
    """Undo the sign convention: multipliers of sum y_i A_i - C >= 0."""
    return np.array(
        [-m if c.sense == "GE" else m for m, c in zip(solution.multipliers, problem.constraints)]
    )


def solve(
    problem: SdpProblem,
    settings: SolverSettings | None = None,
    gap_tol: float | None = None,
    feas_tol: float | None = None,
) -> SdpSolution:
    """Solve ``problem``; explicit tolerances override ``settings``."""
    settings = settings or SolverSettings()
    overrides = {k: v for k, v in (("gap_tol", gap_tol), ("feas_tol", feas_tol)) if v is not None}
    if overrides:
        settings = dataclasses.replace(settings, **overrides)
    errors = problem.validate()
    if errors:
        raise InvalidInputError("invalid SDP: " + "; ".join(errors))
    if settings.debug_dump is not None:
        dump_problem(problem, settings.debug_dump)

    form = _conic_form(problem)
    nu = form.nu
    it = _Iterate.start(form)
    res = None
    for k in range(settings.max_iter + 1):
        res = _residuals(form, it)
        if res.pres <= settings.feas_tol and res.dres <= settings.feas_tol and (
            res.relgap <= settings.gap_tol
        ):
            logger.debug("SDP optimal after %d iterations, gap=%.3g", k, res.relgap)
            return _finish(problem, form, it, res, OPTIMAL, k)
        status = _infeasibility_status(form, it, settings.feas_tol)
        if status is not None:
            logger.debug("SDP %s after %d iterations", status, k)
            return _finish(problem, form, it, res, status, k)
        if k == settings.max_iter:
            break

        mu = it.mu(nu)
        try:
            sc = _nt_scaling(it)
        except linalg.LinAlgError:
            return _finish(
                problem, form, it, res, NUMERICAL_FAILURE, k,
                message="iterate lost positive definiteness",
            )
        schur = _schur_matrix(form, sc)
        try:
            factor = linalg.cho_factor(schur, lower=True)
        except linalg.LinAlgError:
            cond = float(np.linalg.cond(schur))
            logger.debug("Schur complement not positive definite, cond=%.3g", cond)
            return _finish(
                problem, form, it, res, NUMERICAL_FAILURE, k,
                message="Newton system is singular", condition=cond,
            )

        d_aff = _direction(
            form, it, sc, factor, res,
            rx_blocks=[-x for x in it.xs],
            rx_lp=-it.x,
            r_tau=-it.tau * it.kappa,
            eta=1.0,
        )
        alpha_aff = min(1.0, _max_step(it, sc, d_aff))
        mu_aff = it.moved(d_aff, alpha_aff).mu(nu)
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))
        sigma_mu = sigma * mu

        rx_blocks = [
            _corrector_block(sc, j, dx, dz, sigma_mu)
            for j, (dx, dz) in enumerate(zip(d_aff.xs, d_aff.zs))
        ]
        rx_lp = (sigma_mu - it.x * it.z - d_aff.x * d_aff.z) / it.z
        r_tau = sigma_mu - it.tau * it.kappa - d_aff.tau * d_aff.kappa
        d = _direction(
            form, it, sc, factor, res,
            rx_blocks=rx_blocks, rx_lp=rx_lp, r_tau=r_tau, eta=1.0 - sigma,
        )
        alpha = min(1.0, settings.step_fraction * _max_step(it, sc, d))
        if alpha < MIN_STEP:
            return _finish(
                problem, form, it, res, NUMERICAL_FAILURE, k, message="step length stalled"
            )
        it = it.moved(d, alpha)
        logger.debug(
            "iter %d: mu=%.3e sigma=%.3f alpha=%.3f pres=%.2e dres=%.2e gap=%.2e",
            k, mu, sigma, alpha, res.pres, res.dres, res.relgap,
        )

    return _finish(
        problem, form, it, res, NUMERICAL_FAILURE, settings.max_iter,
        message=f"no convergence within {settings.max_iter} iterations",
    )


def check_certificate(
    problem: SdpProblem, solution: SdpSolution, tol: float = 1e-7
) -> CertificateReport:
    """Recompute feasibility, dual feasibility, gap and complementarity from scratch."""
    if solution.status != OPTIMAL:
        return CertificateReport(
            gap=math.nan,
            primal_residual=math.nan,
            dual_residual=math.nan,
            primal_min_eigs=[],
            dual_min_eigs=[],
            scalar_min=math.nan,
            dual_scalar_min=math.nan,
            complementarity=[],
            multiplier_signs_ok=False,
            violations=[f"status is {solution.status}, not OPTIMAL"],
        )
    violations = []
    blocks = [np.asarray(b, dtype=complex) for b in solution.primal_blocks]
    scalars = np.asarray(solution.primal_scalars, dtype=float)
    y = _row_multipliers(problem, solution)

    primal_res = 0.0
    slackness = []
    for i, con in enumerate(problem.constraints):
        lhs = sum(
            float(np.real(np.trace(problem.block_coefficient(con, j) @ blk)))
            for j, blk in enumerate(blocks)
        ) + float(problem.scalar_coefficients(con) @ scalars)
        if con.sense == "EQ":
            viol = abs(lhs - con.rhs)
        elif con.sense == "LE":
            viol = max(0.0, lhs - con.rhs)
        else:
            viol = max(0.0, con.rhs - lhs)
        primal_res = max(primal_res, viol / (1.0 + abs(con.rhs)))
        if con.sense != "EQ":
            slackness.append(abs(solution.multipliers[i] * (lhs - con.rhs)))
    if primal_res > tol:
        violations.append(f"primal residual {primal_res:.3g} exceeds {tol:g}")

    dual_blocks, dual_scalars = _dual_slack(problem, y)
    dual_min = [float(np.linalg.eigvalsh(z)[0]) for z in dual_blocks]
    primal_min = [float(np.linalg.eigvalsh(b)[0]) for b in blocks]
    c_norm = max(
        [float(np.linalg.norm(problem.block_coefficient(None, j), 2)) for j in range(len(blocks))]
        + [float(np.max(np.abs(problem.scalar_coefficients(None)), initial=0.0))],
        default=0.0,
    )
    dual_scalar_min = float(np.min(dual_scalars)) if dual_scalars.size else math.inf
    scalar_min = float(np.min(scalars)) if scalars.size else math.inf
    dual_res = max([0.0] + [-e for e in dual_min] + [-dual_scalar_min]) / (1.0 + c_norm)
    if dual_res > tol:
        violations.append(f"dual slack infeasibility {dual_res:.3g} exceeds {tol:g}")
    for j, e in enumerate(primal_min):
        scale = 1.0 + float(np.linalg.norm(blocks[j], 2))
        if e < -tol * scale:
            violations.append(f"primal block {j} has eigenvalue {e:.3g}")
    if scalar_min < -tol:
        violations.append(f"scalar variable is negative ({scalar_min:.3g})")

    pobj = sum(
        float(np.real(np.trace(problem.block_coefficient(None, j) @ blk)))
        for j, blk in enumerate(blocks)
    ) + float(problem.scalar_coefficients(None) @ scalars)
    dobj = float(y @ np.array([c.rhs for c in problem.constraints]))
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    if gap > tol:
        violations.append(f"duality gap {gap:.3g} exceeds {tol:g}")

    scale = 1.0 + abs(pobj)
    compl = [abs(float(np.real(np.trace(b @ z)))) / scale for b, z in zip(blocks, dual_blocks)]
    compl.append(abs(float(scalars @ dual_scalars)) / scale)
    compl += [s / scale for s in slackness]
    if max(compl, default=0.0) > tol:
        violations.append(f"complementarity {max(compl):.3g} exceeds {tol:g}")

    signs_ok = all(
        m >= -tol for m, c in zip(solution.multipliers, problem.constraints) if c.sense != "EQ"
    )
    if not signs_ok:
        violations.append("an inequality multiplier is negative")

    return CertificateReport(
        gap=gap,
        primal_residual=primal_res,
        dual_residual=dual_res,
        primal_min_eigs=primal_min,
        dual_min_eigs=dual_min,
        scalar_min=scalar_min,
        dual_scalar_min=dual_scalar_min,
        complementarity=compl,
        multiplier_signs_ok=signs_ok,
        violations=violations,
    )


def dump_problem(problem: SdpProblem, path: Path | str) -> Path:
    """Write ``problem`` as sparse triplets for cross-checking with external solvers.

    Row 0 is the objective (maximize). Scalar variables are written as block
    ``len(psd_blocks) + 1`` with row = col = scalar index. Only the upper
    triangle of each Hermitian block is listed; indices are 1-based.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_blocks = len(problem.psd_blocks)
    lines = [
        "# isacbeam sdp dump (maximize)",
        f"blocks {' '.join(str(n) for n in problem.psd_blocks)}",
        f"scalars {problem.scalar_count}",
        f"constraints {len(problem.constraints)}",
        "# con block row col re im",
    ]
    rows: list[Constraint | None] = [None, *problem.constraints]
    for con_idx, row in enumerate(rows):
        for j in range(n_blocks):
            mat = problem.block_coefficient(row, j)
            r, c = np.nonzero(np.triu(mat))
            for a, b in zip(r, c):
                v = mat[a, b]
                lines.append(f"{con_idx} {j + 1} {a + 1} {b + 1} {v.real:.17g} {v.imag:.17g}")
        for s, v in enumerate(problem.scalar_coefficients(row)):
            if v != 0:
                lines.append(f"{con_idx} {n_blocks + 1} {s + 1} {s + 1} {v:.17g} 0")
    lines.append("# rhs con sense value")
    for con_idx, con in enumerate(problem.constraints, start=1):
        lines.append(f"rhs {con_idx} {con.sense} {con.rhs:.17g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote SDP dump to %s", path)
    return path
