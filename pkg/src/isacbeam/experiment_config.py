"""Strict JSON experiment configuration and the built-in reference preset.

Units at this boundary are the ones people quote: degrees, dBm and dB. They
are converted to radians and watts when the scenario is built.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from isacbeam.array_model import (
    VALID_RX_DERIVATIVES,
    ArrayConfig,
    ChannelParams,
    LocationPrior,
    los_user_channel,
)
from isacbeam.beam_design import GammaSearchConfig
from isacbeam.errors import ConfigError, InvalidInputError
from isacbeam.scenario import ScenarioConfig
from isacbeam.sdp_solver import SolverSettings
from isacbeam.units import db_to_linear, dbm_to_watts

logger = logging.getLogger(__name__)

EXPERIMENTS = ("gamma-sweep", "beampattern", "tradeoff", "pcrb-validate", "design", "mc-validate")
COVARIANCES = ("isotropic", "designed")
CSV_PRECISION = 12

# Leaf kinds: "int", "float", "str", "float_list", "opt_float", "opt_str".
_SCHEMA: dict[str, Any] = {
    "preset": "opt_str",
    "scenario": {
        "array": {"n_tx": "int", "n_rx": "int", "spacing_ratio": "float"},
        "prior": {
            "angles_deg": "float_list",
            "probs": "float_list",
            "sigma_theta_rad": "float",
            "range_m": "float",
        },
        "channels": {
            "target_path_loss_db": "float",
            "alpha_min_abs": "float",
            "noise_user_dbm": "float",
            "noise_eve_dbm": "float",
            "noise_radar_dbm": "float",
            "power_budget_dbm": "float",
            "user_angle_deg": "float",
            "user_path_loss_db": "float",
        },
        "pcrb_threshold": "float",
        "rx_derivative": "str",
    },
    "experiment": {
        "name": "str",
        "seed": "int",
        "thresholds": "float_list",
        "gamma_min": "float",
        "gamma_max": "opt_float",
        "grid_points": "int",
        "refine_iterations": "int",
        "theta_min_deg": "float",
        "theta_max_deg": "float",
        "theta_step_deg": "float",
        "sigma_thetas": "float_list",
        "covariance": "str",
        "beams_file": "opt_str",
        "n_trials": "int",
        "n_snapshots": "int",
    },
    "solver": {
        "gap_tol": "float",
        "feas_tol": "float",
        "max_iter": "int",
        "debug_dump": "opt_str",
    },
    "output": {"directory": "opt_str", "precision": "int"},
}

PRESETS: dict[str, dict[str, Any]] = {
    "paper-sec6": {
        "array": {"n_tx": 8, "n_rx": 10, "spacing_ratio": 0.5},
        "prior": {
            "angles_deg": [-55.0, -35.0, 65.0, 45.0],
            "probs": [0.2, 0.3, 0.1, 0.4],
            "sigma_theta_rad": 1e-2,
            "range_m": 1.0,
        },
        "channels": {
            "target_path_loss_db": 10.0,
            "alpha_min_abs": 0.0071,
            "noise_user_dbm": -60.0,
            "noise_eve_dbm": -60.0,
            "noise_radar_dbm": -60.0,
            "power_budget_dbm": 20.0,
            "user_angle_deg": -10.0,
            "user_path_loss_db": 30.0,
        },
        "pcrb_threshold": 2.68e-5,
        "rx_derivative": "analytic",
    },
}

_EXPERIMENT_DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "gamma_min": 1e-4,
    "gamma_max": None,
    "grid_points": 64,
    "refine_iterations": 20,
    "theta_min_deg": -90.0,
    "theta_max_deg": 90.0,
    "theta_step_deg": 1.0,
    "covariance": "isotropic",
    "beams_file": None,
    "n_trials": 2000,
    "n_snapshots": 64,
}

# Sensing thresholds used when the experiment block does not list any.
_DEFAULT_THRESHOLDS: dict[str, list[float]] = {
    "gamma-sweep": [2e-5, 2.68e-5, 4e-5],
    "tradeoff": [float(x) for x in np.linspace(1e-5, 6e-5, 10)],
}
_DEFAULT_SIGMAS = [1e-4, 1e-3, 1e-2]


@dataclass(frozen=True)
class ExperimentSpec:
    """Recipe parameters of the ``experiment`` block, defaults filled in."""

    name: str
    seed: int = 0
    thresholds: tuple[float, ...] = ()
    gamma_min: float = 1e-4
    gamma_max: float | None = None
    grid_points: int = 64
    refine_iterations: int = 20
    theta_min_deg: float = -90.0
    theta_max_deg: float = 90.0
    theta_step_deg: float = 1.0
    sigma_thetas: tuple[float, ...] = tuple(_DEFAULT_SIGMAS)
    covariance: str = "isotropic"
    beams_file: Path | None = None
    n_trials: int = 2000
    n_snapshots: int = 64

    def theta_grid_deg(self) -> np.ndarray:
        """Closed angle grid, endpoints included."""
        span = self.theta_max_deg - self.theta_min_deg
        count = int(round(span / self.theta_step_deg)) + 1
        stop = self.theta_min_deg + (count - 1) * self.theta_step_deg
        return np.linspace(self.theta_min_deg, stop, count)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment: scenario, recipe parameters, solver and output settings."""

    preset: str | None
    scenario: ScenarioConfig
    experiment: ExperimentSpec
    solver: SolverSettings
    output_dir: Path
    precision: int = CSV_PRECISION
    resolved: dict[str, Any] = field(default_factory=dict, repr=False)

    def search_config(self, threads: int = 1) -> GammaSearchConfig:
        """Outer gamma search settings for this experiment."""
        e = self.experiment
        return GammaSearchConfig(
            gamma_min=e.gamma_min,
            gamma_max=e.gamma_max,
            grid_points=e.grid_points,
            refine_iterations=e.refine_iterations,
            threads=threads,
        )

    @property
    def thresholds(self) -> tuple[float, ...]:
        """Sensing thresholds to visit, the scenario's own when none are listed."""
        return self.experiment.thresholds or (self.scenario.pcrb_threshold,)

    def config_hash(self) -> str:
        """Hash of the resolved config, see :func:`config_hash`."""
        return config_hash(self.resolved)


def config_hash(resolved: dict[str, Any]) -> str:
    """First 16 hex digits of sha256 over sorted compact JSON, output directory excluded."""
    data = copy.deepcopy(resolved)
    data.get("output", {}).pop("directory", None)
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _check_leaf(kind: str, value: Any, path: str) -> Any:
    def is_number(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool)

    if kind.startswith("opt_") and value is None:
        return None
    base = kind.removeprefix("opt_")
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if base == "float":
        if not is_number(value) or not math.isfinite(value):
            raise ConfigError(f"expected a finite number, got {value!r}", path)
        return float(value)
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if base == "float_list":
        if not isinstance(value, list) or not all(
            is_number(v) and math.isfinite(v) for v in value
        ):
            raise ConfigError(f"expected a list of finite numbers, got {value!r}", path)
        return [float(v) for v in value]
    raise AssertionError(f"unknown schema kind {kind}")


def _check_schema(data: Any, schema: dict[str, Any], prefix: str = "") -> None:
    """Reject unknown keys and wrong types; missing keys are caught later."""
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", prefix or None)
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in schema:
            raise ConfigError("unknown key", path)
        spec = schema[key]
        if isinstance(spec, dict):
            _check_schema(value, spec, path)
        else:
            _check_leaf(spec, value, path)


def _require(block: dict[str, Any], key: str, path: str) -> Any:
    if key not in block:
        raise ConfigError("missing required key", f"{path}.{key}")
    return block[key]


def _scenario_from_dict(sc: dict[str, Any]) -> ScenarioConfig:
    for name in ("array", "prior", "channels"):
        _require(sc, name, "scenario")
    arr, pri, ch = sc["array"], sc["prior"], sc["channels"]
    for key in _SCHEMA["scenario"]["array"]:
        _require(arr, key, "scenario.array")
    for key in _SCHEMA["scenario"]["prior"]:
        _require(pri, key, "scenario.prior")
    for key in _SCHEMA["scenario"]["channels"]:
        _require(ch, key, "scenario.channels")
    threshold = _require(sc, "pcrb_threshold", "scenario")
    rx = sc.get("rx_derivative", "analytic")
    if rx not in VALID_RX_DERIVATIVES:
        raise ConfigError(
            f"must be one of {', '.join(sorted(VALID_RX_DERIVATIVES))}", "scenario.rx_derivative"
        )

    def build(path, fn):
        try:
            return fn()
        except InvalidInputError as exc:
            raise ConfigError(str(exc), path) from exc

    array = build(
        "scenario.array",
        lambda: ArrayConfig(
            n_tx=arr["n_tx"], n_rx=arr["n_rx"], spacing_ratio=arr["spacing_ratio"]
        ),
    )
    prior = build(
        "scenario.prior",
        lambda: LocationPrior(
            angles_rad=tuple(math.radians(a) for a in pri["angles_deg"]),
            probs=tuple(pri["probs"]),
            sigma_theta=pri["sigma_theta_rad"],
            range_m=pri["range_m"],
        ),
    )
    user = build(
        "scenario.channels.user_path_loss_db",
        lambda: los_user_channel(
            math.radians(ch["user_angle_deg"]), ch["user_path_loss_db"], array
        ),
    )
    channels = build(
        "scenario.channels",
        lambda: ChannelParams(
            beta0_over_r2=float(db_to_linear(-ch["target_path_loss_db"])),
            alpha_min_abs=ch["alpha_min_abs"],
            noise_user_w=float(dbm_to_watts(ch["noise_user_dbm"])),
            noise_eve_w=float(dbm_to_watts(ch["noise_eve_dbm"])),
            noise_radar_w=float(dbm_to_watts(ch["noise_radar_dbm"])),
            power_budget_w=float(dbm_to_watts(ch["power_budget_dbm"])),
            user_channel=user,
        ),
    )
    return build(
        "scenario.pcrb_threshold",
        lambda: ScenarioConfig(
            array=array, prior=prior, channels=channels, pcrb_threshold=threshold, rx_derivative=rx
        ),
    )


def _experiment_from_dict(ex: dict[str, Any], base_dir: Path | None) -> ExperimentSpec:
    name = _require(ex, "name", "experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"must be one of {', '.join(EXPERIMENTS)}", "experiment.name")
    values = {**_EXPERIMENT_DEFAULTS, **ex}
    thresholds = values.get("thresholds") or _DEFAULT_THRESHOLDS.get(name, [])
    sigmas = values.get("sigma_thetas") or _DEFAULT_SIGMAS

    if any(g <= 0 for g in thresholds):
        raise ConfigError("thresholds must be > 0", "experiment.thresholds")
    if any(s <= 0 for s in sigmas):
        raise ConfigError("sigma values must be > 0", "experiment.sigma_thetas")
    if values["covariance"] not in COVARIANCES:
        raise ConfigError(f"must be one of {', '.join(COVARIANCES)}", "experiment.covariance")
    if values["theta_step_deg"] <= 0 or values["theta_max_deg"] < values["theta_min_deg"]:
        raise ConfigError(
            "need theta_step_deg > 0 and theta_max_deg >= theta_min_deg", "experiment"
        )
    if values["n_trials"] < 1 or values["n_snapshots"] < 1:
        raise ConfigError("n_trials and n_snapshots must be >= 1", "experiment")

    beams_file = None
    if values["beams_file"] is not None:
        beams_file = Path(values["beams_file"])
        if not beams_file.is_absolute() and base_dir is not None:
            beams_file = base_dir / beams_file
        if not beams_file.is_file():
            raise ConfigError(f"file {beams_file} does not exist", "experiment.beams_file")
    try:
        GammaSearchConfig(
            gamma_min=values["gamma_min"],
            gamma_max=values["gamma_max"],
            grid_points=values["grid_points"],
            refine_iterations=values["refine_iterations"],
        )
    except InvalidInputError as exc:
        raise ConfigError(str(exc), "experiment") from exc

    return ExperimentSpec(
        name=name,
        seed=values["seed"],
        thresholds=tuple(thresholds),
        gamma_min=values["gamma_min"],
        gamma_max=values["gamma_max"],
        grid_points=values["grid_points"],
        refine_iterations=values["refine_iterations"],
        theta_min_deg=values["theta_min_deg"],
        theta_max_deg=values["theta_max_deg"],
        theta_step_deg=values["theta_step_deg"],
        sigma_thetas=tuple(sorted(sigmas)),
        covariance=values["covariance"],
        beams_file=beams_file,
        n_trials=values["n_trials"],
        n_snapshots=values["n_snapshots"],
    )


def _solver_from_dict(sv: dict[str, Any]) -> SolverSettings:
    defaults = SolverSettings()
    settings = SolverSettings(
        gap_tol=sv.get("gap_tol", defaults.gap_tol),
        feas_tol=sv.get("feas_tol", defaults.feas_tol),
        max_iter=sv.get("max_iter", defaults.max_iter),
        debug_dump=Path(sv["debug_dump"]) if sv.get("debug_dump") else None,
    )
    if not (settings.gap_tol > 0 and settings.feas_tol > 0 and settings.max_iter >= 1):
        raise ConfigError("tolerances must be > 0 and max_iter >= 1", "solver")
    return settings


def parse_config(
    data: Any,
    preset: str | None = None,
    seed: int | None = None,
    out: str | Path | None = None,
    base_dir: Path | None = None,
) -> ExperimentConfig:
    """Validate an already-decoded config document and apply CLI overrides.

    Raises:
        ConfigError: on the first schema violation, naming its key path.
    """
    _check_schema(data, _SCHEMA)
    data = copy.deepcopy(data)
    preset_name = preset if preset is not None else data.get("preset")
    scenario_raw = data.get("scenario", {})
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}", "preset")
        scenario_raw = _deep_merge(PRESETS[preset_name], scenario_raw)
    experiment_raw = dict(data.get("experiment", {}))
    if seed is not None:
        experiment_raw["seed"] = seed
    output_raw = dict(data.get("output", {}))
    if out is not None:
        output_raw["directory"] = str(out)
    precision = output_raw.get("precision", CSV_PRECISION)
    if not 1 <= precision <= 17:
        raise ConfigError("precision must be within 1..17", "output.precision")

    scenario = _scenario_from_dict(scenario_raw)
    experiment = _experiment_from_dict(experiment_raw, base_dir)
    solver = _solver_from_dict(data.get("solver", {}))
    resolved = {
        "preset": preset_name,
        "scenario": scenario_raw,
        "experiment": {**_EXPERIMENT_DEFAULTS, **experiment_raw},
        "solver": data.get("solver", {}),
        "output": {**output_raw, "precision": precision},
    }
    logger.debug("Resolved config: %s", resolved)
    return ExperimentConfig(
        preset=preset_name,
        scenario=scenario,
        experiment=experiment,
        solver=solver,
        output_dir=Path(output_raw.get("directory") or "."),
        precision=precision,
        resolved=resolved,
    )


def load_config(
    path: str | Path,
    preset: str | None = None,
    seed: int | None = None,
    out: str | Path | None = None,
) -> ExperimentConfig:
    """Read a UTF-8 JSON config file and validate it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(data, preset=preset, seed=seed, out=out, base_dir=path.parent)
