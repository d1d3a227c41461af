"""Posterior Cramer-Rao bound on the target angle under the Gaussian-mixture prior.

Expectations over the prior use per-component Gauss-Hermite quadrature; the
prior-information correction ``eps`` uses adaptive QUADPACK integration.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import integrate
from scipy.special import logsumexp

from isacbeam.array_model import (
    ArrayConfig,
    ChannelParams,
    LocationPrior,
    RxDerivative,
    rho0,
    rx_derivative_ratio,
    steering_rx,
    steering_rx_deriv,
    steering_tx,
    steering_tx_deriv,
)
from isacbeam.errors import InvalidInputError, NumericalError

logger = logging.getLogger(__name__)

GH_NODES = 40
_GH_U, _GH_W = hermgauss(GH_NODES)
_GH_U.setflags(write=False)
_GH_W.setflags(write=False)

# Half-width of the per-component integration windows, in sigma_theta.
EPS_WINDOW_SIGMAS = 8.0

# Schur complements below this fraction of the prior information count as zero.
DEGENERATE_RATIO = 1e-14

PSD_TOL = 1e-10


@dataclass(frozen=True)
class FimComponents:
    """Prior-averaged traces feeding the angle PCRB.

    ``g1``, ``g2``, ``g3`` and ``g4`` are per-snapshot expectations; the data
    Fisher information scales them by ``n_snapshots``.
    """

    g1: float
    g2: float
    g3: complex
    g4: float
    eps: float
    jp_theta: float
    n_snapshots: int = 1

    def data_information(self, beta: complex, noise_radar_w: float) -> float:
        """Schur complement J_tt - J_tb J_bb^-1 J_bt of the data FIM."""
        if self.g1 <= 0.0:
            return 0.0
        coef = 2.0 * abs(beta) ** 2 / noise_radar_w * self.n_snapshots
        return coef * max(self.g2 - abs(self.g3) ** 2 / self.g1, 0.0)

    def upper_information(self, beta: complex, noise_radar_w: float) -> float:
        """Data information retained by the upper bound (the g4 term only)."""
        return 2.0 * abs(beta) ** 2 / noise_radar_w * self.n_snapshots * self.g4

    def is_degenerate(self, beta: complex, noise_radar_w: float) -> bool:
        """True when the data carry no usable angle information."""
        return self.data_information(beta, noise_radar_w) < DEGENERATE_RATIO * self.jp_theta


@dataclass(frozen=True)
class PcrbResult:
    """Exact angle PCRB; ``degenerate`` marks the prior-only fallback."""

    value: float
    degenerate: bool = False


@dataclass(frozen=True)
class QbarMatrix:
    """Closed-form sensing matrix and its receive-gain constant."""

    matrix: np.ndarray
    rho0: float

    @property
    def lambda_max(self) -> float:
        """Largest eigenvalue of the matrix."""
        return float(np.linalg.eigvalsh(self.matrix)[-1])


@dataclass(frozen=True)
class QbarComponentCheck:
    """Quadrature versus closed form for one mixture component's contribution."""

    k: int
    s_quadrature: np.ndarray
    s_closed_form: np.ndarray
    max_rel_error: float
    rx_gain_ratio: float

    def __iter__(self):
        yield self.s_quadrature
        yield self.s_closed_form


def _check_covariance(r_x: np.ndarray, n_tx: int) -> np.ndarray:
    r = np.asarray(r_x, dtype=complex)
    if r.shape != (n_tx, n_tx):
        raise InvalidInputError(f"R_x must be {n_tx}x{n_tx}, got shape {r.shape}")
    scale = max(1.0, float(np.max(np.abs(r)))) if r.size else 1.0
    if np.max(np.abs(r - r.conj().T)) > 1e-10 * scale:
        raise InvalidInputError("R_x is not Hermitian")
    r = 0.5 * (r + r.conj().T)
    if np.linalg.eigvalsh(r)[0] < -PSD_TOL * scale:
        raise InvalidInputError("R_x is not positive semidefinite")
    return r


def quadrature_nodes(prior: LocationPrior, component: int | None = None):
    """Gauss-Hermite nodes and weights for E_theta[.] under the prior.

    With ``component`` set, only that component's nodes are returned and the
    weights include its probability.
    """
    ks = range(prior.k) if component is None else [component]
    thetas = []
    weights = []
    for k in ks:
        thetas.append(prior.angles_rad[k] + math.sqrt(2.0) * prior.sigma_theta * _GH_U)
        weights.append(prior.probs[k] * _GH_W / math.sqrt(math.pi))
    return np.concatenate(thetas), np.concatenate(weights)


def fim_prior(prior: LocationPrior) -> tuple[float, float]:
    """Return ``(jp_theta, eps)`` for the smoothed prior.

    eps is the information lost to component overlap: the prior-weighted
    spread of the component responsibilities, which is zero for K = 1.
    """
    s2 = prior.sigma_theta**2
    if prior.k == 1:
        return 1.0 / s2, 0.0

    angles = prior.angles
    with np.errstate(divide="ignore"):
        logw = np.log(prior.weights)
    diff2 = (angles[:, None] - angles[None, :]) ** 2
    log_norm = math.log(prior.sigma_theta * math.sqrt(2.0 * math.pi))

    def integrand(theta: float) -> float:
        comp = logw - 0.5 * (theta - angles) ** 2 / s2 - log_norm
        log_pbar = logsumexp(comp)
        if not np.isfinite(log_pbar):
            return 0.0
        r = np.exp(comp - log_pbar)
        return 0.5 * math.exp(log_pbar) * float(r @ diff2 @ r) / s2**2

    half = EPS_WINDOW_SIGMAS * prior.sigma_theta
    ordered = np.sort(angles)
    breaks = set(np.concatenate([ordered - half, ordered + half]).tolist())
    breaks.update((0.5 * (ordered[:-1] + ordered[1:])).tolist())
    edges = sorted(breaks)

    eps = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            try:
                val, err = integrate.quad(
                    integrand, lo, hi, epsabs=1e-14 / s2, epsrel=1e-10, limit=200
                )
            except integrate.IntegrationWarning as exc:
                raise NumericalError(
                    "eps quadrature did not converge",
                    {"interval": (lo, hi), "sigma_theta": prior.sigma_theta, "cause": str(exc)},
                ) from exc
            eps += val
    eps = max(eps, 0.0)
    logger.debug("Prior information 1/s2=%.6g eps=%.3g", 1.0 / s2, eps)
    return 1.0 / s2 - eps, eps


def fim_components(
    r_x: np.ndarray,
    prior: LocationPrior,
    cfg: ArrayConfig,
    rx_derivative: RxDerivative = "analytic",
    n_snapshots: int = 1,
) -> FimComponents:
    """Prior expectations g1..g4 for covariance ``r_x`` plus the prior terms."""
    r = _check_covariance(r_x, cfg.n_tx)
    if n_snapshots < 1:
        raise InvalidInputError(f"n_snapshots must be >= 1, got {n_snapshots}")
    thetas, weights = quadrature_nodes(prior)

    a = steering_tx(thetas, cfg)
    ad = steering_tx_deriv(thetas, cfg)
    b = steering_rx(thetas, cfg)
    bd = steering_rx_deriv(thetas, cfg, rx_derivative)

    ara = np.einsum("ni,ij,nj->n", a.conj(), r, a).real
    adra = np.einsum("ni,ij,nj->n", ad.conj(), r, a)
    adrad = np.einsum("ni,ij,nj->n", ad.conj(), r, ad).real
    bd_norm2 = np.sum(np.abs(bd) ** 2, axis=1)
    bd_b = np.sum(bd.conj() * b, axis=1)
    n_r = float(cfg.n_rx)

    g1 = n_r * float(weights @ ara)
    g2 = float(weights @ (bd_norm2 * ara + 2.0 * (bd_b * adra).real + n_r * adrad))
    # c(theta) = tr(M'^H M R) = (b'^H b) a^H R a + N_r a^H R a'
    g3 = complex(weights @ (bd_b * ara + n_r * adra.conj()))
    g4 = float(weights @ (bd_norm2 * ara))

    jp_theta, eps = fim_prior(prior)
    return FimComponents(
        g1=g1, g2=g2, g3=g3, g4=g4, eps=eps, jp_theta=jp_theta, n_snapshots=n_snapshots
    )


def fim_data(
    r_x: np.ndarray,
    beta: complex,
    prior: LocationPrior,
    cfg: ArrayConfig,
    channels: ChannelParams,
    rx_derivative: RxDerivative = "analytic",
    n_snapshots: int = 1,
) -> np.ndarray:
    """Data Fisher information over (theta, Re beta, Im beta) as a 3x3 real matrix."""
    fc = fim_components(r_x, prior, cfg, rx_derivative, n_snapshots)
    scale = 2.0 * n_snapshots / channels.noise_radar_w
    cross = np.conj(beta) * fc.g3
    j = np.zeros((3, 3))
    j[0, 0] = scale * abs(beta) ** 2 * fc.g2
    j[0, 1] = j[1, 0] = scale * cross.real
    j[0, 2] = j[2, 0] = -scale * cross.imag
    j[1, 1] = j[2, 2] = scale * fc.g1
    return j


def _require_prior_information(fc: FimComponents) -> None:
    if not fc.jp_theta > 0:
        raise NumericalError(
            "prior information is not positive; the FIM is singular",
            {"jp_theta": fc.jp_theta, "eps": fc.eps},
        )


def pcrb_from_components(
    fc: FimComponents, beta: complex, noise_radar_w: float
) -> PcrbResult:
    """Exact PCRB from precomputed components.

    When the data carry no usable angle information the prior-only value
    1/jp_theta comes back with ``degenerate=True``.
    """
    _require_prior_information(fc)
    if fc.is_degenerate(beta, noise_radar_w):
        logger.warning(
            "Data FIM is singular (g1=%.3g, g2=%.3g); returning the prior-only bound",
            fc.g1,
            fc.g2,
        )
        return PcrbResult(1.0 / fc.jp_theta, degenerate=True)
    return PcrbResult(1.0 / (fc.data_information(beta, noise_radar_w) + fc.jp_theta))


def pcrb_exact_result(
    r_x: np.ndarray,
    beta: complex,
    prior: LocationPrior,
    cfg: ArrayConfig,
    channels: ChannelParams,
    rx_derivative: RxDerivative = "analytic",
    n_snapshots: int = 1,
) -> PcrbResult:
    """Angle PCRB together with its degeneracy flag."""
    fc = fim_components(r_x, prior, cfg, rx_derivative, n_snapshots)
    return pcrb_from_components(fc, beta, channels.noise_radar_w)


def pcrb_exact(
    r_x: np.ndarray,
    beta: complex,
    prior: LocationPrior,
    cfg: ArrayConfig,
    channels: ChannelParams,
    rx_derivative: RxDerivative = "analytic",
    n_snapshots: int = 1,
) -> float:
    """Angle PCRB, the (1,1) entry of (J_D + J_P)^-1, in rad^2."""
    return pcrb_exact_result(r_x, beta, prior, cfg, channels, rx_derivative, n_snapshots).value


def pcrb_upper(
    r_x: np.ndarray,
    beta: complex,
    prior: LocationPrior,
    cfg: ArrayConfig,
    channels: ChannelParams,
    rx_derivative: RxDerivative = "analytic",
    n_snapshots: int = 1,
) -> float:
    """Upper bound on the angle PCRB keeping only the receive-derivative term g4."""
    fc = fim_components(r_x, prior, cfg, rx_derivative, n_snapshots)
    _require_prior_information(fc)
    return 1.0 / (fc.upper_information(beta, channels.noise_radar_w) + fc.jp_theta)


def q_bar(prior: LocationPrior, cfg: ArrayConfig) -> QbarMatrix:
    """Closed-form sensing matrix rho0 sum_k p_k (cos 2theta_k + 1) a_k a_k^H."""
    r0 = rho0(cfg)
    a = steering_tx(prior.angles, cfg)
    w = r0 * prior.weights * (np.cos(2.0 * prior.angles) + 1.0)
    q = np.einsum("k,ki,kj->ij", w, a, a.conj())
    q = 0.5 * (q + q.conj().T)
    return QbarMatrix(matrix=q, rho0=r0)


def _qbar_array(qbar) -> np.ndarray:
    return qbar.matrix if isinstance(qbar, QbarMatrix) else np.asarray(qbar)


def pcrb_closed_form_covariance(
    r_x: np.ndarray,
    beta_abs_min: float,
    qbar,
    prior: LocationPrior,
    channels: ChannelParams,
) -> float:
    """Closed-form PCRB approximation evaluated on a transmit covariance."""
    q = _qbar_array(qbar)
    info = float(np.real(np.trace(q @ np.asarray(r_x))))
    coef = 2.0 * beta_abs_min**2 / channels.noise_radar_w
    return 1.0 / (coef * info + 1.0 / prior.sigma_theta**2)


def pcrb_closed_form(
    w: np.ndarray,
    vs,
    beta_abs_min: float,
    qbar,
    prior: LocationPrior,
    channels: ChannelParams,
) -> float:
    """Closed-form PCRB approximation for an information beam and AN beams."""
    q = _qbar_array(qbar)
    w = np.asarray(w, dtype=complex)
    info = float(np.real(w.conj() @ q @ w))
    for v in vs:
        v = np.asarray(v, dtype=complex)
        info += float(np.real(v.conj() @ q @ v))
    coef = 2.0 * beta_abs_min**2 / channels.noise_radar_w
    return 1.0 / (coef * info + 1.0 / prior.sigma_theta**2)


def validate_qbar_component(k: int, prior: LocationPrior, cfg: ArrayConfig) -> QbarComponentCheck:
    """Compare one component's prior-averaged receive-gain matrix with its closed form.

    The quadrature side integrates p_k N(theta; theta_k, sigma^2) 2 rho0
    cos^2(theta) a a^H; the closed form evaluates the integrand's Gaussian
    weight at the mean. Elementwise relative errors are infinite wherever the
    closed form vanishes.
    """
    if not 0 <= k < prior.k:
        raise InvalidInputError(f"component index {k} out of range for K={prior.k}")
    r0 = rho0(cfg)
    thetas, weights = quadrature_nodes(prior, component=k)
    a = steering_tx(thetas, cfg)
    gain = 2.0 * r0 * np.cos(thetas) ** 2
    s_quad = np.einsum("n,ni,nj->ij", weights * gain, a, a.conj())

    theta_k = prior.angles_rad[k]
    a_k = steering_tx(theta_k, cfg)
    s_closed = prior.probs[k] * r0 * (math.cos(2.0 * theta_k) + 1.0) * np.outer(a_k, a_k.conj())

    denom = np.abs(s_closed)
    diff = np.abs(s_quad - s_closed)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(denom > 0, diff / np.where(denom > 0, denom, 1.0), np.inf)
    return QbarComponentCheck(
        k=k,
        s_quadrature=s_quad,
        s_closed_form=s_closed,
        max_rel_error=float(np.max(rel)),
        rx_gain_ratio=rx_derivative_ratio(cfg),
    )
