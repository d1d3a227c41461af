"""Immutable scenario description shared by design, evaluation and the CLI."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from isacbeam.array_model import (
    VALID_RX_DERIVATIVES,
    ArrayConfig,
    ChannelParams,
    LocationPrior,
    RxDerivative,
    steering_tx,
)
from isacbeam.errors import InvalidInputError
from isacbeam.pcrb import QbarMatrix, q_bar


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Everything an optimization or evaluation needs to know about the system.

    Args:
        array: Transmit and receive array geometry.
        prior: Candidate target / eavesdropper angles and smoothing width.
        channels: Gains, noise powers, power budget and user channel.
        pcrb_threshold: Sensing accuracy requirement Gamma in rad^2.
        rx_derivative: Receive-derivative convention for exact PCRB evaluation.
    """

    array: ArrayConfig
    prior: LocationPrior
    channels: ChannelParams
    pcrb_threshold: float
    rx_derivative: RxDerivative = "analytic"

    def __post_init__(self):
        if not self.pcrb_threshold > 0:
            raise InvalidInputError(f"pcrb_threshold must be > 0, got {self.pcrb_threshold!r}")
        if self.rx_derivative not in VALID_RX_DERIVATIVES:
            raise InvalidInputError(f"unknown rx_derivative {self.rx_derivative!r}")
        if self.channels.user_channel.shape != (self.array.n_tx,):
            raise InvalidInputError(
                f"user_channel has length {self.channels.user_channel.size}, "
                f"expected n_tx={self.array.n_tx}"
            )

    @cached_property
    def qbar(self) -> QbarMatrix:
        """Closed-form sensing matrix, computed once."""
        return q_bar(self.prior, self.array)

    @cached_property
    def steering_k(self) -> np.ndarray:
        """Steering vectors a(theta_k), one row per candidate angle."""
        return steering_tx(self.prior.angles, self.array)

    @cached_property
    def h_matrix(self) -> np.ndarray:
        """User channel outer product H = h h^H."""
        h = self.channels.user_channel
        return np.outer(h, h.conj())

    @cached_property
    def a_matrices(self) -> list[np.ndarray]:
        """A_k = a(theta_k) a^H(theta_k) for each candidate angle."""
        return [np.outer(a, a.conj()) for a in self.steering_k]

    @property
    def beta_min_abs(self) -> float:
        """Smallest reflection gain magnitude considered."""
        return self.channels.beta_min_abs

    @property
    def eve_noise_term(self) -> float:
        """Eavesdropper noise term on the SINR denominator."""
        return self.channels.eve_noise_term

    @property
    def sensing_vacuous(self) -> bool:
        """True when the threshold is no tighter than the prior variance."""
        return 1.0 / self.pcrb_threshold <= 1.0 / self.prior.sigma_theta**2

    @property
    def sensing_rhs_unclamped(self) -> float:
        """Sensing right-hand side coefficient before clamping at zero."""
        ch = self.channels
        return (
            ch.noise_radar_w
            / (2.0 * ch.beta_min_abs**2)
            * (1.0 / self.pcrb_threshold - 1.0 / self.prior.sigma_theta**2)
        )

    @property
    def sensing_rhs_coeff(self) -> float:
        """Required tr(Q_bar R_x), clamped at zero when the constraint is vacuous."""
        return max(0.0, self.sensing_rhs_unclamped)

    @property
    def eve_sinr_bound(self) -> float:
        """Eavesdropper SINR if all power were beamed at it without AN."""
        return self.channels.power_budget_w * self.array.n_tx / self.eve_noise_term

    def replace(self, **changes) -> ScenarioConfig:
        """Copy with the given fields replaced and validated again."""
        return dataclasses.replace(self, **changes)

    def with_threshold(self, pcrb_threshold: float) -> ScenarioConfig:
        """Copy with another sensing threshold."""
        return self.replace(pcrb_threshold=pcrb_threshold)

    def with_sigma_theta(self, sigma_theta: float) -> ScenarioConfig:
        """Copy with another prior spread."""
        return self.replace(prior=dataclasses.replace(self.prior, sigma_theta=sigma_theta))

    def with_user_channel(self, user_channel: np.ndarray) -> ScenarioConfig:
        """Copy with another user channel."""
        return self.replace(
            channels=dataclasses.replace(self.channels, user_channel=user_channel)
        )
