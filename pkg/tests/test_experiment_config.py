"""Tests for the JSON experiment config and the reference preset."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from isacbeam.errors import ConfigError
from isacbeam.experiment_config import (
    CSV_PRECISION,
    PRESETS,
    config_hash,
    load_config,
    parse_config,
)


def _doc(name: str = "design", **experiment) -> dict:
    return {"preset": "paper-sec6", "experiment": {"name": name, **experiment}}


def _write(tmp_path: Path, data, name: str = "exp.json") -> Path:
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return path


class TestPreset:
    def test_reference_values(self):
        cfg = parse_config(_doc())
        sc = cfg.scenario
        assert sc.array.n_tx == 8 and sc.array.n_rx == 10
        assert sc.array.spacing_ratio == 0.5
        assert sum(sc.prior.probs) == pytest.approx(1.0)
        assert sc.prior.angles_rad[0] == pytest.approx(math.radians(-55.0))
        assert sc.pcrb_threshold == 2.68e-5
        assert sc.rx_derivative == "analytic"

    def test_unit_conversions(self):
        ch = parse_config(_doc()).scenario.channels
        assert ch.power_budget_w == pytest.approx(0.1)
        assert ch.noise_user_w == pytest.approx(1e-9)
        assert ch.noise_radar_w == pytest.approx(1e-9)
        assert ch.beta0_over_r2 == pytest.approx(0.1)

    def test_scenario_overrides_merge_into_preset(self):
        data = _doc()
        data["scenario"] = {"channels": {"user_path_loss_db": 60.0}, "pcrb_threshold": 4e-5}
        cfg = parse_config(data)
        assert cfg.scenario.pcrb_threshold == 4e-5
        assert cfg.scenario.array.n_tx == 8
        assert cfg.resolved["scenario"]["channels"]["user_path_loss_db"] == 60.0
        assert PRESETS["paper-sec6"]["channels"]["user_path_loss_db"] == 30.0

    def test_unknown_preset(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config(_doc(), preset="nope")
        assert exc_info.value.key_path == "preset"

    def test_scenario_required_without_preset(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config({"experiment": {"name": "design"}})
        assert exc_info.value.key_path == "scenario.array"


class TestSchema:
    def test_unknown_key_reports_dotted_path(self):
        data = _doc()
        data["scenario"] = {"channels": {"bogus": 1.0}}
        with pytest.raises(ConfigError) as exc_info:
            parse_config(data)
        assert exc_info.value.key_path == "scenario.channels.bogus"
        assert "unknown key" in str(exc_info.value)

    def test_wrong_type(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config(_doc(grid_points="many"))
        assert exc_info.value.key_path == "experiment.grid_points"

    def test_bool_is_not_a_number(self):
        data = _doc()
        data["scenario"] = {"pcrb_threshold": True}
        with pytest.raises(ConfigError, match="finite number"):
            parse_config(data)

    def test_non_finite_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(_doc(thresholds=[1e-5, float("inf")]))

    def test_missing_experiment_name(self):
        with pytest.raises(ConfigError) as exc_info:
            parse_config({"preset": "paper-sec6", "experiment": {}})
        assert exc_info.value.key_path == "experiment.name"

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="must be one of"):
            parse_config(_doc("fig9"))

    def test_invalid_scenario_value_maps_to_config_error(self):
        data = _doc()
        data["scenario"] = {"prior": {"probs": [0.5, 0.5, 0.5, 0.5]}}
        with pytest.raises(ConfigError) as exc_info:
            parse_config(data)
        assert exc_info.value.key_path == "scenario.prior"

    def test_bad_rx_derivative(self):
        data = _doc()
        data["scenario"] = {"rx_derivative": "numeric"}
        with pytest.raises(ConfigError) as exc_info:
            parse_config(data)
        assert exc_info.value.key_path == "scenario.rx_derivative"

    def test_bad_search_settings(self):
        with pytest.raises(ConfigError):
            parse_config(_doc(grid_points=1))

    def test_bad_precision(self):
        data = _doc()
        data["output"] = {"precision": 30}
        with pytest.raises(ConfigError) as exc_info:
            parse_config(data)
        assert exc_info.value.key_path == "output.precision"

    def test_bad_solver(self):
        data = _doc()
        data["solver"] = {"gap_tol": 0.0}
        with pytest.raises(ConfigError) as exc_info:
            parse_config(data)
        assert exc_info.value.key_path == "solver"


class TestExperimentDefaults:
    def test_defaults(self):
        cfg = parse_config(_doc())
        e = cfg.experiment
        assert e.seed == 0
        assert e.grid_points == 64
        assert e.covariance == "isotropic"
        assert cfg.precision == CSV_PRECISION
        assert cfg.thresholds == (2.68e-5,)

    def test_recipe_thresholds(self):
        sweep = parse_config(_doc("gamma-sweep"))
        assert sweep.thresholds == (2e-5, 2.68e-5, 4e-5)
        tradeoff = parse_config(_doc("tradeoff"))
        assert len(tradeoff.thresholds) == 10
        assert tradeoff.thresholds[0] == pytest.approx(1e-5)
        assert tradeoff.thresholds[-1] == pytest.approx(6e-5)

    def test_theta_grid(self):
        cfg = parse_config(_doc(theta_min_deg=-10.0, theta_max_deg=10.0, theta_step_deg=5.0))
        assert list(cfg.experiment.theta_grid_deg()) == [-10.0, -5.0, 0.0, 5.0, 10.0]

    def test_sigmas_sorted(self):
        cfg = parse_config(_doc("pcrb-validate", sigma_thetas=[1e-2, 1e-4]))
        assert cfg.experiment.sigma_thetas == (1e-4, 1e-2)

    def test_search_config(self):
        cfg = parse_config(_doc(grid_points=8, refine_iterations=4))
        search = cfg.search_config(threads=3)
        assert search.grid_points == 8
        assert search.refine_iterations == 4
        assert search.threads == 3


class TestOverrides:
    def test_seed_and_out(self, tmp_path):
        cfg = parse_config(_doc(seed=1), seed=7, out=tmp_path / "out")
        assert cfg.experiment.seed == 7
        assert cfg.output_dir == tmp_path / "out"

    def test_preset_argument_wins(self):
        data = {"preset": "missing", "experiment": {"name": "design"}}
        cfg = parse_config(data, preset="paper-sec6")
        assert cfg.preset == "paper-sec6"

    def test_default_output_dir(self):
        assert parse_config(_doc()).output_dir == Path(".")


class TestConfigHash:
    def test_stable_under_output_directory(self, tmp_path):
        a = parse_config(_doc(), out=tmp_path / "a")
        b = parse_config(_doc(), out=tmp_path / "b")
        assert a.config_hash() == b.config_hash()
        assert len(a.config_hash()) == 16

    def test_changes_with_content(self):
        assert parse_config(_doc(seed=1)).config_hash() != parse_config(_doc(seed=2)).config_hash()

    def test_key_order_irrelevant(self):
        assert config_hash({"a": 1, "b": {"c": 2}}) == config_hash({"b": {"c": 2}, "a": 1})


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        cfg = load_config(_write(tmp_path, _doc("tradeoff")))
        assert cfg.experiment.name == "tradeoff"

    def test_invalid_json(self, tmp_path):
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(_write(tmp_path, "{not json"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_top_level_must_be_object(self, tmp_path):
        with pytest.raises(ConfigError, match="expected an object"):
            load_config(_write(tmp_path, "[1, 2]"))

    def test_beams_file_relative_to_config(self, tmp_path):
        (tmp_path / "beams.csv").write_text("beam,index,real,imag\n", encoding="utf-8")
        cfg = load_config(_write(tmp_path, _doc("pcrb-validate", beams_file="beams.csv")))
        assert cfg.experiment.beams_file == tmp_path / "beams.csv"

    def test_beams_file_must_exist(self, tmp_path):
        with pytest.raises(ConfigError) as exc_info:
            load_config(_write(tmp_path, _doc("pcrb-validate", beams_file="gone.csv")))
        assert exc_info.value.key_path == "experiment.beams_file"


class TestShippedConfigs:
    @pytest.mark.parametrize(
        "path",
        sorted((Path(__file__).parents[1] / "configs").glob("*.json")),
        ids=lambda p: p.stem,
    )
    def test_validates(self, path):
        cfg = load_config(path)
        assert cfg.preset == "paper-sec6"
        assert cfg.output_dir.parts[0] == "results"
