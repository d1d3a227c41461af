"""Experiment recipes that turn a validated config into CSV files.

Every recipe is deterministic for a given config: solver paths contain no
randomness, the MC oracle is seeded per trial and thread pools preserve input
order. CSV assembly is single-threaded.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path

import numpy as np

from isacbeam.beam_design import (
    BeamformingSolution,
    benchmark_mrt,
    benchmark_no_an,
    feasibility_probe,
    locate_optimum,
    search_gamma,
)
from isacbeam.config import VERSION
from isacbeam.errors import ConfigError, InfeasibleScenarioError, IsacBeamError
from isacbeam.evaluation import beampattern, mc_mse_oracle, power_split
from isacbeam.experiment_config import ExperimentConfig
from isacbeam.pcrb import pcrb_closed_form_covariance, pcrb_exact_result, pcrb_upper
from isacbeam.scenario import ScenarioConfig
from isacbeam.units import watts_to_dbm

logger = logging.getLogger(__name__)

BEAMS_CSV = "design_beams.csv"


def _fmt(value, precision: int) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{precision}g}"


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    cfg: ExperimentConfig,
) -> Path:
    """Write a CSV with the version/config-hash comment line first."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# isacbeam {VERSION} config_sha256={cfg.config_hash()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v, cfg.precision) for v in row])
    logger.info("Wrote %s", path)
    return path


def _scenario_for(cfg: ExperimentConfig, threshold: float) -> ScenarioConfig:
    return cfg.scenario.with_threshold(threshold)


def _design(cfg: ExperimentConfig, scenario: ScenarioConfig, threads: int) -> BeamformingSolution:
    probe = feasibility_probe(scenario)
    if not probe.feasible:
        raise InfeasibleScenarioError(
            f"Gamma={scenario.pcrb_threshold:.4g} is unreachable: tr(Q R) can reach "
            f"{probe.max_lhs:.4g} but {probe.required_rhs:.4g} is required",
            probe=probe,
        )
    return search_gamma(scenario, cfg.search_config(threads), cfg.solver)


def run_gamma_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[Path]:
    """g(gamma) on the grid for every Gamma, plus the refined optimum flagged ``is_opt``.

    ``secrecy_rate_bph`` is log2((1+f)/(1+gamma)) before clamping at zero so
    the shape of the curve stays visible where it dips below zero.
    """
    rows = []
    for threshold in sorted(cfg.thresholds):
        scenario = _scenario_for(cfg, threshold)
        try:
            best, points, _ = locate_optimum(scenario, cfg.search_config(threads), cfg.solver)
        except InfeasibleScenarioError as exc:
            logger.info("Gamma=%.4g infeasible on the whole grid", threshold)
            best, points = None, exc.points
        cells = [(p.gamma, p.f_gamma, p.secrecy_rate, p.status, 0) for p in points]
        if best is not None:
            cells = [c for c in cells if c[0] != best.gamma]
            cells.append((best.gamma, best.f_gamma, best.secrecy_rate, best.status, 1))
            logger.info(
                "Gamma=%.4g: optimum gamma=%.6g rate=%.6g",
                threshold,
                best.gamma,
                best.secrecy_rate,
            )
        for c in sorted(cells, key=lambda c: c[0]):
            rows.append((threshold, *c))
    columns = ("Gamma", "gamma", "f_gamma", "secrecy_rate_bph", "status", "is_opt")
    return [write_csv(cfg.output_dir / "gamma_sweep.csv", columns, rows, cfg)]


def run_beampattern(cfg: ExperimentConfig, threads: int = 1) -> list[Path]:
    """Information and AN beampatterns of the design at the configured Gamma."""
    solution = _design(cfg, cfg.scenario, threads)
    theta_deg = cfg.experiment.theta_grid_deg()
    bp = beampattern(solution.w, solution.an_beams, np.radians(theta_deg), cfg.scenario.array)
    rows = zip(theta_deg, watts_to_dbm(bp.info_power), watts_to_dbm(bp.an_power))
    columns = ("theta_deg", "info_power_dbm", "an_power_dbm")
    return [write_csv(cfg.output_dir / "beampattern.csv", columns, rows, cfg)]


def _scheme_row(threshold: float, scheme: str, design: Callable[[], BeamformingSolution]):
    """One tradeoff row; a failed design becomes ``feasible=0`` with the reason."""
    try:
        sol = design()
    except InfeasibleScenarioError:
        return (threshold, scheme, False, math.nan, "infeasible")
    except IsacBeamError as exc:
        logger.warning("Gamma=%.4g %s failed: %s", threshold, scheme, exc)
        return (threshold, scheme, False, math.nan, type(exc).__name__)
    rate = sol.secrecy_rate if sol.feasible else math.nan
    return (threshold, scheme, sol.feasible, rate, "" if sol.feasible else "infeasible")


def run_tradeoff(cfg: ExperimentConfig, threads: int = 1) -> list[Path]:
    """Secrecy rate against Gamma for the proposed design, MRT and the no-AN design.

    A row that fails for any library reason is written as infeasible with the
    reason in ``note``; the other rows still run.
    """
    rows = []
    search_cfg = cfg.search_config(threads)
    for threshold in sorted(cfg.thresholds):
        scenario = _scenario_for(cfg, threshold)
        rows.append(
            _scheme_row(
                threshold, "proposed", lambda: search_gamma(scenario, search_cfg, cfg.solver)
            )
        )
        rows.append(_scheme_row(threshold, "mrt", lambda: benchmark_mrt(scenario)))
        rows.append(
            _scheme_row(
                threshold, "no_an", lambda: benchmark_no_an(scenario, search_cfg, cfg.solver)
            )
        )
        logger.info("Gamma=%.4g done", threshold)
    columns = ("Gamma", "scheme", "feasible", "secrecy_rate_bph", "note")
    return [write_csv(cfg.output_dir / "tradeoff.csv", columns, rows, cfg)]


def write_beams(path: Path, w: np.ndarray, vs: list[np.ndarray], cfg: ExperimentConfig) -> Path:
    """Write the information beam as ``w`` and the AN beams as ``v0``, ``v1``, ..."""
    rows = []
    for name, beam in [("w", w)] + [(f"v{i}", v) for i, v in enumerate(vs)]:
        rows.extend((name, n, z.real, z.imag) for n, z in enumerate(np.asarray(beam)))
    return write_csv(path, ("beam", "index", "real", "imag"), rows, cfg)


def read_beams(path: Path, n_tx: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Load beams written by :func:`write_beams`.

    Raises:
        ConfigError: the file is malformed or its beams do not match ``n_tx``.
    """
    beams: dict[str, np.ndarray] = {}
    order: list[str] = []
    try:
        with Path(path).open(encoding="utf-8") as fh:
            lines = [line for line in fh if not line.startswith("#")]
        for rec in csv.DictReader(lines):
            name = rec["beam"]
            if name not in beams:
                beams[name] = np.zeros(n_tx, dtype=complex)
                order.append(name)
            beams[name][int(rec["index"])] = complex(float(rec["real"]), float(rec["imag"]))
    except (OSError, KeyError, ValueError, IndexError) as exc:
        raise ConfigError(
            f"cannot read beams from {path}: {exc}", "experiment.beams_file"
        ) from exc
    if "w" not in beams:
        raise ConfigError(f"{path} has no information beam 'w'", "experiment.beams_file")
    return beams["w"], [beams[n] for n in order if n != "w"]


def _isotropic_beams(scenario: ScenarioConfig) -> tuple[np.ndarray, list[np.ndarray]]:
    n = scenario.array.n_tx
    cols = math.sqrt(scenario.channels.power_budget_w / n) * np.eye(n, dtype=complex)
    return cols[:, 0], [cols[:, i] for i in range(1, n)]


def _beams_for(cfg: ExperimentConfig, threads: int) -> tuple[np.ndarray, list[np.ndarray]]:
    e = cfg.experiment
    if e.beams_file is not None:
        return read_beams(e.beams_file, cfg.scenario.array.n_tx)
    if e.covariance == "designed":
        sol = _design(cfg, cfg.scenario, threads)
        return sol.w, sol.an_beams
    return _isotropic_beams(cfg.scenario)


def _covariance(w: np.ndarray, vs: list[np.ndarray]) -> np.ndarray:
    r = np.outer(w, w.conj())
    for v in vs:
        r = r + np.outer(v, v.conj())
    return r


def run_pcrb_validate(cfg: ExperimentConfig, threads: int = 1) -> list[Path]:
    """Exact PCRB, its upper bound and the closed form for each sigma_theta."""
    w, vs = _beams_for(cfg, threads)
    r_x = _covariance(w, vs)
    rows = []
    for sigma in cfg.experiment.sigma_thetas:
        sc = cfg.scenario.with_sigma_theta(sigma)
        ch = sc.channels
        args = (r_x, ch.beta_min_abs, sc.prior, sc.array, ch, sc.rx_derivative)
        exact = pcrb_exact_result(*args)
        upper = pcrb_upper(*args)
        closed = pcrb_closed_form_covariance(r_x, ch.beta_min_abs, sc.qbar, sc.prior, ch)
        rel_err = abs(upper - closed) / upper
        rows.append((sigma, exact.value, upper, closed, rel_err, exact.degenerate))
    columns = (
        "sigma_theta",
        "pcrb_exact",
        "pcrb_upper_quad",
        "pcrb_closed_form",
        "rel_err_bound_vs_closed",
        "exact_degenerate",
    )
    return [write_csv(cfg.output_dir / "pcrb_validate.csv", columns, rows, cfg)]


def run_design(cfg: ExperimentConfig, threads: int = 1) -> list[Path]:
    """Optimized beams at the configured Gamma and a key/value summary."""
    sc = cfg.scenario
    sol = _design(cfg, sc, threads)
    ch = sc.channels
    r_x = sol.covariance
    split = power_split(sol.w, sol.an_beams)
    exact_args = (r_x, ch.beta_min_abs, sc.prior, sc.array, ch, sc.rx_derivative)
    exact = pcrb_exact_result(*exact_args)
    summary = [
        ("Gamma", sc.pcrb_threshold),
        ("gamma_star", sol.gamma_star),
        ("secrecy_rate_bph", sol.secrecy_rate),
        ("pcrb_closed_form", sol.pcrb_value),
        ("pcrb_exact", exact.value),
        ("pcrb_exact_degenerate", exact.degenerate),
        ("pcrb_upper", pcrb_upper(*exact_args)),
        ("info_power_w", split.info_power),
        ("an_power_w", split.an_power),
        ("total_power_w", split.total),
        ("an_beams", len(sol.an_beams)),
        ("rank_ratio", sol.reconstruction.rank_ratio if sol.reconstruction else math.nan),
        ("kkt_ok", bool(sol.kkt and sol.kkt.ok())),
    ]
    beams = write_beams(cfg.output_dir / BEAMS_CSV, sol.w, sol.an_beams, cfg)
    table = write_csv(cfg.output_dir / "design_summary.csv", ("key", "value"), summary, cfg)
    return [beams, table]


def run_mc_validate(cfg: ExperimentConfig, threads: int = 1) -> list[Path]:
    """Monte-Carlo MAP MSE against the exact PCRB at the configured Gamma."""
    e = cfg.experiment
    w, vs = _beams_for(cfg, threads)
    res = mc_mse_oracle(
        w,
        vs,
        cfg.scenario,
        complex(cfg.scenario.beta_min_abs),
        n_trials=e.n_trials,
        n_snapshots=e.n_snapshots,
        seed=e.seed,
        threads=threads,
    )
    columns = ("n_trials", "n_snapshots", "seed", "empirical_mse", "pcrb_exact", "ratio")
    rows = [
        (res.n_trials, res.n_snapshots, res.seed, res.empirical_mse, res.pcrb_exact, res.ratio)
    ]
    return [write_csv(cfg.output_dir / "mc_validate.csv", columns, rows, cfg)]


RECIPES = {
    "gamma-sweep": run_gamma_sweep,
    "beampattern": run_beampattern,
    "tradeoff": run_tradeoff,
    "pcrb-validate": run_pcrb_validate,
    "design": run_design,
    "mc-validate": run_mc_validate,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[Path]:
    """Run the recipe named in ``cfg.experiment.name`` and return the files written."""
    name = cfg.experiment.name
    logger.info("Starting %s (config %s) into %s", name, cfg.config_hash(), cfg.output_dir)
    paths = RECIPES[name](cfg, threads)
    logger.info("Finished %s: %s", name, ", ".join(str(p) for p in paths))
    return paths
