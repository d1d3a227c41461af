"""Shared test fixtures."""

from __future__ import annotations

import math

import numpy as np
import pytest

from isacbeam.array_model import ArrayConfig, ChannelParams, LocationPrior, los_user_channel
from isacbeam.beam_design import GammaSearchConfig
from isacbeam.scenario import ScenarioConfig

REFERENCE_ANGLES_DEG = (-55.0, -35.0, 65.0, 45.0)
REFERENCE_PROBS = (0.2, 0.3, 0.1, 0.4)


def _build_scenario(
    user_path_loss_db: float = 30.0,
    pcrb_threshold: float = 2.68e-5,
    sigma_theta: float = 1e-2,
    rx_derivative: str = "analytic",
) -> ScenarioConfig:
    array = ArrayConfig(n_tx=8, n_rx=10, spacing_ratio=0.5)
    prior = LocationPrior(
        angles_rad=tuple(math.radians(a) for a in REFERENCE_ANGLES_DEG),
        probs=REFERENCE_PROBS,
        sigma_theta=sigma_theta,
    )
    channels = ChannelParams(
        beta0_over_r2=0.1,
        alpha_min_abs=0.0071,
        noise_user_w=1e-9,
        noise_eve_w=1e-9,
        noise_radar_w=1e-9,
        power_budget_w=0.1,
        user_channel=los_user_channel(math.radians(-10.0), user_path_loss_db, array),
    )
    return ScenarioConfig(
        array=array,
        prior=prior,
        channels=channels,
        pcrb_threshold=pcrb_threshold,
        rx_derivative=rx_derivative,
    )


@pytest.fixture
def array_cfg() -> ArrayConfig:
    """Provide the reference 8-by-10 half-wavelength array."""
    return ArrayConfig()


@pytest.fixture
def prior() -> LocationPrior:
    """Provide the four-component reference prior."""
    return _build_scenario().prior


@pytest.fixture
def paper_scenario() -> ScenarioConfig:
    """Provide the reference scenario with a 30 dB user path loss."""
    return _build_scenario(user_path_loss_db=30.0)


@pytest.fixture
def beampattern_scenario() -> ScenarioConfig:
    """Provide the reference scenario with a 60 dB user path loss."""
    return _build_scenario(user_path_loss_db=60.0)


@pytest.fixture
def fast_search() -> GammaSearchConfig:
    """Provide a coarse gamma grid for quick design runs."""
    return GammaSearchConfig(grid_points=16, refine_iterations=10)


@pytest.fixture
def rng() -> np.random.Generator:
    """Provide a seeded random generator."""
    return np.random.default_rng(20240607)


@pytest.fixture
def make_scenario():
    """Provide a factory for reference scenarios with overrides."""
    return _build_scenario


@pytest.fixture
def make_psd(rng):
    """Provide a factory for random Hermitian PSD matrices of a given rank."""

    def make(n: int, rank: int | None = None) -> np.ndarray:
        k = rank or n
        g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        return g @ g.conj().T

    return make
