"""isacbeam: secure ISAC beamforming with a PCRB sensing constraint.

Library API::

    from isacbeam import SecureIsacDesigner, PRESETS
    from isacbeam.experiment_config import parse_config

    cfg = parse_config({"preset": "paper-sec6", "experiment": {"name": "design"}})
    designer = SecureIsacDesigner(cfg.scenario)
    solution = designer.design()
    print(solution.secrecy_rate, designer.pcrb(solution))
"""

from __future__ import annotations

import logging

import numpy as np

from isacbeam.beam_design import (
    BeamformingSolution,
    GammaSearchConfig,
    benchmark_mrt,
    benchmark_no_an,
    feasibility_probe,
    search_gamma,
)
from isacbeam.config import VERSION, Config
from isacbeam.errors import (
    CertificateError,
    ConfigError,
    InfeasibleScenarioError,
    InvalidInputError,
    IsacBeamError,
    NumericalError,
)
from isacbeam.evaluation import SecrecyReport, beampattern, secrecy_report
from isacbeam.experiment_config import PRESETS
from isacbeam.pcrb import pcrb_exact, pcrb_upper
from isacbeam.scenario import ScenarioConfig
from isacbeam.sdp_solver import SolverSettings

__version__ = VERSION

__all__ = [
    "SecureIsacDesigner",
    "ScenarioConfig",
    "SolverSettings",
    "GammaSearchConfig",
    "BeamformingSolution",
    "Config",
    "PRESETS",
    "IsacBeamError",
    "InvalidInputError",
    "ConfigError",
    "NumericalError",
    "CertificateError",
    "InfeasibleScenarioError",
]

logger = logging.getLogger(__name__)


class SecureIsacDesigner:
    """High-level API for designing and evaluating beams on one scenario.

    Args:
        scenario: System description, including the sensing threshold.
        settings: Interior-point tolerances for every inner SDP.
        search: Outer gamma grid and refinement settings.
    """

    def __init__(
        self,
        scenario: ScenarioConfig,
        settings: SolverSettings | None = None,
        search: GammaSearchConfig | None = None,
    ):
        self.scenario = scenario
        self.settings = settings or SolverSettings()
        self.search = search or GammaSearchConfig()

    def design(self) -> BeamformingSolution:
        """Optimal information beam and AN beams for the scenario's threshold.

        Raises:
            InfeasibleScenarioError: the threshold cannot be met within the power budget.
        """
        probe = feasibility_probe(self.scenario)
        if not probe.feasible:
            raise InfeasibleScenarioError(
                f"Gamma={self.scenario.pcrb_threshold:.4g} needs tr(Q R) >= "
                f"{probe.required_rhs:.4g}, at most {probe.max_lhs:.4g} is reachable",
                probe=probe,
            )
        return search_gamma(self.scenario, self.search, self.settings)

    def benchmarks(self) -> dict[str, BeamformingSolution | None]:
        """MRT and no-AN baselines; an infeasible no-AN search maps to None."""
        out: dict[str, BeamformingSolution | None] = {"mrt": benchmark_mrt(self.scenario)}
        try:
            out["no_an"] = benchmark_no_an(self.scenario, self.search, self.settings)
        except InfeasibleScenarioError:
            logger.info("No-AN benchmark infeasible at Gamma=%.4g", self.scenario.pcrb_threshold)
            out["no_an"] = None
        return out

    def secrecy(self, solution: BeamformingSolution) -> SecrecyReport:
        """Per-eavesdropper SINRs and secrecy rates of a solution."""
        return secrecy_report(solution.w, solution.an_beams, self.scenario)

    def pcrb(self, solution: BeamformingSolution, exact: bool = True) -> float:
        """Exact PCRB of the solution's covariance, or its quadrature upper bound."""
        sc = self.scenario
        fn = pcrb_exact if exact else pcrb_upper
        return fn(
            solution.covariance,
            sc.beta_min_abs,
            sc.prior,
            sc.array,
            sc.channels,
            rx_derivative=sc.rx_derivative,
        )

    def beampattern(self, solution: BeamformingSolution, theta_deg=None):
        """Beampattern on a 1-degree grid over [-90, 90] unless angles are given."""
        if theta_deg is None:
            theta_deg = np.arange(-90.0, 91.0)
        theta = np.radians(np.asarray(theta_deg, dtype=float))
        return beampattern(solution.w, solution.an_beams, theta, self.scenario.array)
