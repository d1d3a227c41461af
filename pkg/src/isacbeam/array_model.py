"""Array geometry, steering vectors, channels and the Gaussian-mixture location prior.

All angle arguments are radians. Steering functions accept a scalar angle
(returning a length-N vector) or an array of angles (returning one row per
angle, shape ``(..., N)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from isacbeam.errors import InvalidInputError

RxDerivative = Literal["analytic", "rho0"]
VALID_RX_DERIVATIVES: set[str] = {"analytic", "rho0"}

# Probabilities must sum to one within this tolerance.
PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear arrays at the base station.

    Args:
        n_tx: Number of transmit antennas.
        n_rx: Number of receive antennas.
        spacing_ratio: Element spacing over wavelength.
    """

    n_tx: int = 8
    n_rx: int = 10
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if int(self.n_tx) != self.n_tx or self.n_tx < 1:
            raise InvalidInputError(f"n_tx must be a positive integer, got {self.n_tx!r}")
        if int(self.n_rx) != self.n_rx or self.n_rx < 1:
            raise InvalidInputError(f"n_rx must be a positive integer, got {self.n_rx!r}")
        if not self.spacing_ratio > 0:
            raise InvalidInputError(f"spacing_ratio must be > 0, got {self.spacing_ratio!r}")


@dataclass(frozen=True)
class LocationPrior:
    """Discrete candidate target angles smoothed into a Gaussian mixture."""

    angles_rad: tuple[float, ...]
    probs: tuple[float, ...]
    sigma_theta: float = 1e-2
    range_m: float = 1.0

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(self.angles_rad))
        probs = tuple(float(p) for p in np.atleast_1d(self.probs))
        object.__setattr__(self, "angles_rad", angles)
        object.__setattr__(self, "probs", probs)
        if not angles:
            raise InvalidInputError("prior needs at least one candidate angle")
        if len(angles) != len(probs):
            raise InvalidInputError(
                f"angles_rad has {len(angles)} entries but probs has {len(probs)}"
            )
        if any(not (-math.pi <= a < math.pi) for a in angles):
            raise InvalidInputError("candidate angles must lie in [-pi, pi)")
        if len(set(angles)) != len(angles):
            raise InvalidInputError("candidate angles must be pairwise distinct")
        if any(p < 0 or p > 1 for p in probs):
            raise InvalidInputError("probabilities must lie in [0, 1]")
        if abs(math.fsum(probs) - 1.0) > PROB_SUM_TOL:
            raise InvalidInputError(f"probabilities sum to {math.fsum(probs)!r}, expected 1")
        if not self.sigma_theta > 0:
            raise InvalidInputError(f"sigma_theta must be > 0, got {self.sigma_theta!r}")
        if not self.range_m > 0:
            raise InvalidInputError(f"range_m must be > 0, got {self.range_m!r}")

    @property
    def k(self) -> int:
        """Number of mixture components."""
        return len(self.angles_rad)

    @property
    def angles(self) -> np.ndarray:
        """Candidate angles as an array, radians."""
        return np.asarray(self.angles_rad)

    @property
    def weights(self) -> np.ndarray:
        """Mixture weights as an array."""
        return np.asarray(self.probs)


@dataclass(frozen=True, eq=False)
class ChannelParams:
    """Channel gains, noise powers and the power budget, all in linear units.

    ``beta0_over_r2`` is the one-way BS-target power gain; the eavesdropper and
    the radar echo both see it. ``user_channel`` is stored read-only.
    """

    beta0_over_r2: float
    alpha_min_abs: float
    noise_user_w: float
    noise_eve_w: float
    noise_radar_w: float
    power_budget_w: float
    user_channel: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in (
            "beta0_over_r2",
            "alpha_min_abs",
            "noise_user_w",
            "noise_eve_w",
            "noise_radar_w",
            "power_budget_w",
        ):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be a positive finite number, got {value!r}")
        h = np.array(self.user_channel, dtype=complex).reshape(-1)
        if not np.linalg.norm(h) > 0:
            raise InvalidInputError("user_channel must have nonzero norm")
        h.setflags(write=False)
        object.__setattr__(self, "user_channel", h)

    @property
    def beta_min_abs(self) -> float:
        """Worst-case round-trip amplitude |beta_bar| = (beta0/r^2)|alpha_bar|."""
        return self.beta0_over_r2 * self.alpha_min_abs

    @property
    def eve_noise_term(self) -> float:
        """Eavesdropper noise referred to the steering-vector scale, sigma_E^2 r^2 / beta0."""
        return self.noise_eve_w / self.beta0_over_r2


def _phase_index(n: int) -> np.ndarray:
    """Symmetric element index 2n-1-N for n = 1..N."""
    return 2.0 * np.arange(1, n + 1) - 1.0 - n


def _steering(theta, n: int, spacing: float) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    return np.exp(1j * math.pi * spacing * _phase_index(n) * np.sin(th)[..., None])


def _steering_deriv(theta, n: int, spacing: float) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    coef = 1j * math.pi * spacing * _phase_index(n) * np.cos(th)[..., None]
    return coef * _steering(th, n, spacing)


def steering_tx(theta, cfg: ArrayConfig) -> np.ndarray:
    """Transmit steering vector a(theta); every entry has unit modulus."""
    return _steering(theta, cfg.n_tx, cfg.spacing_ratio)


def steering_rx(theta, cfg: ArrayConfig) -> np.ndarray:
    """Receive steering vector b(theta)."""
    return _steering(theta, cfg.n_rx, cfg.spacing_ratio)


def steering_tx_deriv(theta, cfg: ArrayConfig) -> np.ndarray:
    """Elementwise derivative of a(theta) with respect to theta."""
    return _steering_deriv(theta, cfg.n_tx, cfg.spacing_ratio)


def rho0(cfg: ArrayConfig) -> float:
    """Receive-array gain constant sum_{n=1}^{N_r} pi^2 Delta^2 (n-1)^2."""
    n = np.arange(cfg.n_rx, dtype=float)
    return float(math.pi**2 * cfg.spacing_ratio**2 * np.sum(n**2))


def rx_derivative_ratio(cfg: ArrayConfig) -> float:
    """Ratio of the analytic ||b'(theta)||^2 to the rho0 convention 2 rho0 cos^2(theta).

    Equals 1 for a single receive antenna, where both vanish.
    """
    analytic = float(np.sum(_phase_index(cfg.n_rx) ** 2))
    n = np.arange(cfg.n_rx, dtype=float)
    conventional = 2.0 * float(np.sum(n**2))
    if conventional == 0.0:
        return 1.0
    return analytic / conventional


def steering_rx_deriv(
    theta, cfg: ArrayConfig, convention: RxDerivative = "analytic"
) -> np.ndarray:
    """Derivative of b(theta).

    ``"analytic"`` differentiates b(theta) as defined. ``"rho0"`` rescales it so
    that ||b'(theta)||^2 = 2 rho0 cos^2(theta).
    """
    if convention not in VALID_RX_DERIVATIVES:
        raise InvalidInputError(f"unknown receive-derivative convention {convention!r}")
    deriv = _steering_deriv(theta, cfg.n_rx, cfg.spacing_ratio)
    if convention == "rho0":
        deriv = deriv / math.sqrt(rx_derivative_ratio(cfg))
    return deriv


def response_matrix(theta: float, cfg: ArrayConfig) -> np.ndarray:
    """Round-trip response M(theta) = b(theta) a^H(theta), shape (N_r, N_t)."""
    return np.outer(steering_rx(theta, cfg), steering_tx(theta, cfg).conj())


def response_matrix_deriv(theta: float, cfg: ArrayConfig) -> np.ndarray:
    """Derivative of M(theta): b' a^H + b a'^H."""
    a = steering_tx(theta, cfg)
    b = steering_rx(theta, cfg)
    return np.outer(steering_rx_deriv(theta, cfg), a.conj()) + np.outer(
        b, steering_tx_deriv(theta, cfg).conj()
    )


def gmm_logpdf(theta, prior: LocationPrior) -> np.ndarray:
    """Log density of the smoothed prior, stable far from every component."""
    th = np.asarray(theta, dtype=float)[..., None]
    s = prior.sigma_theta
    with np.errstate(divide="ignore"):
        logw = np.log(prior.weights)
    comp = logw - 0.5 * ((th - prior.angles) / s) ** 2 - math.log(s * math.sqrt(2 * math.pi))
    return logsumexp(comp, axis=-1)


def gmm_pdf(theta, prior: LocationPrior) -> np.ndarray:
    """Density sum_k p_k N(theta; theta_k, sigma_theta^2) in 1/rad."""
    th = np.asarray(theta, dtype=float)[..., None]
    s = prior.sigma_theta
    comp = np.exp(-0.5 * ((th - prior.angles) / s) ** 2) / (s * math.sqrt(2 * math.pi))
    return comp @ prior.weights


def eavesdropper_channel(theta, channels: ChannelParams, cfg: ArrayConfig) -> np.ndarray:
    """Row channel h_E^H(theta) = sqrt(beta0/r^2) a^H(theta), returned as a 1-D array.

    The range enters only through ``channels.beta0_over_r2``.
    """
    return math.sqrt(channels.beta0_over_r2) * steering_tx(theta, cfg).conj()


def los_user_channel(user_angle: float, path_loss_db: float, cfg: ArrayConfig) -> np.ndarray:
    """Line-of-sight user channel sqrt(10^(-PL/10)) a(user_angle)."""
    if path_loss_db < 0:
        raise InvalidInputError(f"path_loss_db must be >= 0, got {path_loss_db!r}")
    return math.sqrt(10.0 ** (-path_loss_db / 10.0)) * steering_tx(user_angle, cfg)
