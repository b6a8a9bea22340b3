"""
Tests for configuration resolution, the experiment planner and the results
table.

Run with: pytest tests/ -v
Acceptance runs on the preset scenes: pytest tests/ -v --runslow
"""
import copy
import json
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))


def _config(raw: dict, **kwargs):
    from wakesar.pipeline.validation_engine import ConfigValidator, resolve_config
    result = ConfigValidator().validate(resolve_config(raw, **kwargs))
    assert result["is_valid"], result["errors"]
    return result["config"]


def _sea_only(small_scene: dict) -> dict:
    """The small scene without a ship: no wake quadrature, quick to render."""
    raw = copy.deepcopy(small_scene)
    raw["scene"]["ship"] = None
    return raw


# ─────────────────────────────────────────────────────────────────────────────
# Validation Engine Tests
# ─────────────────────────────────────────────────────────────────────────────

class TestResolveConfig:
    def test_preset_layers_over_scale(self):
        from wakesar.pipeline.validation_engine import resolve_config
        resolved = resolve_config({}, preset="image-2", scale="desk")
        assert resolved["scene"]["grid"]["nx"] == 128
        assert resolved["scene"]["ship"]["heading"] == pytest.approx(math.pi / 4)
        assert resolved["preset"] == "image-2"
        assert "description" not in resolved

    def test_user_values_win(self):
        from wakesar.pipeline.validation_engine import resolve_config
        raw = {"scene": {"ship": {"froude": 0.3}, "grid": {"nx": 64}}}
        resolved = resolve_config(raw, preset="image-1", scale="paper")
        assert resolved["scene"]["ship"]["froude"] == 0.3
        assert resolved["scene"]["ship"]["length"] == 52.0
        assert resolved["scene"]["grid"] == {"nx": 64, "ny": 256, "dx": 2.0, "dy": 2.0}

    def test_preset_named_in_the_file(self):
        from wakesar.pipeline.validation_engine import resolve_config
        resolved = resolve_config({"preset": "image-1"})
        assert resolved["scene"]["ship"]["heading"] == 0.0

    def test_unknown_preset_and_scale(self):
        from wakesar.errors import ConfigValidationError
        from wakesar.pipeline.validation_engine import resolve_config
        with pytest.raises(ConfigValidationError):
            resolve_config({}, preset="image-9")
        with pytest.raises(ConfigValidationError):
            resolve_config({}, scale="huge")

    def test_deep_merge_replaces_lists(self):
        from wakesar.pipeline.validation_engine import deep_merge
        base = {"a": {"b": 1, "c": [1, 2]}, "d": 1}
        merged = deep_merge(base, {"a": {"c": [3]}})
        assert merged == {"a": {"b": 1, "c": [3]}, "d": 1}
        assert base["a"]["c"] == [1, 2]

    def test_presets_listed(self):
        from wakesar.pipeline.validation_engine import preset_names
        assert preset_names() == ["image-1", "image-2"]


class TestConfigValidator:
    def test_small_scene_valid(self, small_scene):
        from wakesar.pipeline.validation_engine import ConfigValidator, resolve_config
        result = ConfigValidator().validate(resolve_config(small_scene))
        assert result["is_valid"]
        assert result["errors"] == []
        assert result["config"].scene.grid.nx == 64

    def test_field_errors_are_located(self, small_scene):
        from wakesar.pipeline.validation_engine import ConfigValidator, resolve_config
        small_scene["scene"]["spectrum"] = {"wind_speed_10m": -1.0}
        result = ConfigValidator().validate(resolve_config(small_scene))
        assert not result["is_valid"]
        assert result["config"] is None
        assert any("wind_speed_10m" in message for message in result["errors"])

    def test_resolution_must_tile_facets(self, small_scene):
        from wakesar.pipeline.validation_engine import ConfigValidator, resolve_config
        small_scene["radar"]["range_resolution"] = 6.0
        result = ConfigValidator().validate(resolve_config(small_scene))
        assert any(message.startswith("radar.range_resolution") for message in result["errors"])

    def test_wavelet_depth_checked_against_image(self, small_scene):
        from wakesar.pipeline.validation_engine import ConfigValidator, resolve_config
        small_scene["despeckle"]["levels"] = 6
        result = ConfigValidator().validate(resolve_config(small_scene))
        assert any(message.startswith("despeckle.levels") for message in result["errors"])

    def test_warnings(self, small_scene):
        from wakesar.pipeline.validation_engine import ConfigValidator, resolve_config
        small_scene["scene"]["ship"] = None
        small_scene["despeckle"]["tune"] = True
        small_scene["despeckle"]["tuning_grid"] = [0.5, 2.0]
        small_scene["despeckle"]["regularisers"] = [{"kind": "cauchy", "params": {"gamma": 0.1, "omega": 1.0}}]
        result = ConfigValidator().validate(resolve_config(small_scene))
        assert result["is_valid"]
        joined = " | ".join(result["warnings"])
        assert "no wake" in joined
        assert "clamped" in joined
        assert "tuning_grid" in joined

    def test_lambda_with_cauchy_rejected(self, small_scene):
        from wakesar.pipeline.validation_engine import ConfigValidator, resolve_config
        small_scene["despeckle"]["regularisers"] = [{"kind": "cauchy", "params": {"lambda": 0.1}}]
        result = ConfigValidator().validate(resolve_config(small_scene))
        assert not result["is_valid"]


class TestLoadConfig:
    def test_from_file_with_overrides(self, tmp_path, small_scene):
        from wakesar.pipeline.validation_engine import load_config
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps(small_scene), encoding="utf-8")
        config = load_config(path, overrides={"noise": {"looks": [7]}})
        assert config.noise.looks == [7]
        assert config.name == "small"

    def test_missing_file(self, tmp_path):
        from wakesar.pipeline.validation_engine import load_config
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "none.json")

    def test_invalid_json(self, tmp_path):
        from wakesar.errors import ConfigurationError
        from wakesar.pipeline.validation_engine import load_config
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_invalid_config_raises_with_messages(self, small_scene):
        from wakesar.errors import ConfigValidationError
        from wakesar.pipeline.validation_engine import load_config
        with pytest.raises(ConfigValidationError) as excinfo:
            load_config(overrides={**small_scene, "radar": {"range_resolution": 6.0}})
        assert excinfo.value.exit_code == 1
        assert excinfo.value.errors


# ─────────────────────────────────────────────────────────────────────────────
# Experiment Planner Tests
# ─────────────────────────────────────────────────────────────────────────────

class TestSpeckleSeed:
    def test_deterministic_and_distinct(self):
        from wakesar.pipeline.experiment_planner import speckle_seed
        assert speckle_seed(1, 3) == speckle_seed(1, 3)
        assert len({speckle_seed(1, looks) for looks in (3, 5, 7)}) == 3
        assert speckle_seed(1, 3) != speckle_seed(2, 3)


class TestExperimentPlanner:
    def test_run_id_follows_config(self, small_scene):
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        a = ExperimentPlanner(_config(small_scene), write_outputs=False)
        b = ExperimentPlanner(_config(copy.deepcopy(small_scene)), write_outputs=False)
        small_scene["scene"]["seed"] = 4
        c = ExperimentPlanner(_config(small_scene), write_outputs=False)
        assert a.run_id == b.run_id == a.config_hash[:12]
        assert a.run_id != c.run_id

    def test_full_run_writes_outputs(self, small_scene, tmp_path):
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        planner = ExperimentPlanner(_config(small_scene), output_dir=tmp_path)
        result = planner.run()

        assert result["status"] == "completed"
        assert len(result["rows"]) == 8
        assert {row["method"] for row in result["rows"]} == {"Noisy", "L1", "TV", "Cauchy"}
        for name in ("clean.wsr", "clean.json", "noisy_L3.wsr", "restored_cauchy_L5.wsr",
                     "config.json", "results.txt", "results.csv", "results.json", "run.json"):
            assert (tmp_path / name).exists(), name

        record = json.loads((tmp_path / "run.json").read_text(encoding="utf-8"))
        assert record["run_id"] == planner.run_id
        steps = [entry["step"] for entry in record["audit_trail"]]
        assert steps[0] == "Run started" and steps[-1] == "Run completed"
        sidecar = json.loads((tmp_path / "noisy_L3.json").read_text(encoding="utf-8"))
        assert sidecar["provenance"]["seeds"]["noise"] == 11
        assert sidecar["image"]["looks"] == 3

    def test_worker_count_does_not_change_results(self, small_scene):
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        config = _config(_sea_only(small_scene))
        rows = []
        for workers in (1, 3):
            planner = ExperimentPlanner(config, workers=workers, write_outputs=False)
            planner.simulate()
            planner.speckle()
            planner.despeckle()
            rows.append(planner.evaluate())
        assert rows[0] == rows[1]

    def test_bit_identical_reruns(self, small_scene):
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        config = _config(_sea_only(small_scene))
        first = ExperimentPlanner(config, write_outputs=False)
        second = ExperimentPlanner(config, write_outputs=False)
        np.testing.assert_array_equal(first.simulate().pixels, second.simulate().pixels)
        np.testing.assert_array_equal(first.speckle()[3].pixels, second.speckle()[3].pixels)

    def test_more_looks_less_noise(self, small_scene):
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        planner = ExperimentPlanner(_config(_sea_only(small_scene)), write_outputs=False)
        planner.speckle()
        rows = {row["looks"]: row for row in planner.evaluate() if row["method"] == "Noisy"}
        assert rows[5]["psnr_db"] > rows[3]["psnr_db"]

    def test_tuned_scale_reported(self, small_scene):
        from wakesar.models import RegulariserSpec
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        small_scene["despeckle"]["tuning_grid"] = [0.5, 1.0]
        planner = ExperimentPlanner(_config(_sea_only(small_scene)), write_outputs=False)
        planner.speckle(looks=[3])
        planner.despeckle(regularisers=[RegulariserSpec(kind="l1")], tune=True)
        row = next(r for r in planner.evaluate() if r["method"] == "L1")
        assert row["tuned_scale"] in (0.5, 1.0)

    def test_evaluate_needs_a_scene(self, small_scene):
        from wakesar.errors import ConfigurationError
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        with pytest.raises(ConfigurationError):
            ExperimentPlanner(_config(small_scene), write_outputs=False).evaluate()

    def test_unknown_look_count(self, small_scene):
        from wakesar.errors import ConfigurationError
        from wakesar.pipeline.experiment_planner import ExperimentPlanner
        planner = ExperimentPlanner(_config(_sea_only(small_scene)), write_outputs=False)
        planner.speckle(looks=[3])
        with pytest.raises(ConfigurationError):
            planner.despeckle(looks=[9])

    def test_failed_run_recorded(self, small_scene, tmp_path, monkeypatch):
        from wakesar.errors import NumericalError
        from wakesar.pipeline import experiment_planner
        from wakesar.pipeline.experiment_planner import ExperimentPlanner

        def broken(config):
            raise NumericalError("synthetic failure")

        monkeypatch.setattr(experiment_planner, "simulate_scene", broken)
        planner = ExperimentPlanner(_config(small_scene), output_dir=tmp_path)
        with pytest.raises(NumericalError):
            planner.run()
        record = json.loads((tmp_path / "run.json").read_text(encoding="utf-8"))
        assert record["status"] == "failed"


class TestBenchmark:
    def test_orderings_per_look_count(self, small_scene):
        from wakesar.pipeline.experiment_planner import run_benchmark
        raw = _sea_only(small_scene)
        raw["despeckle"]["regularisers"] = [{"kind": "l1", "params": {"max_iter": 10}},
                                           {"kind": "cauchy", "params": {"max_iter": 10}}]
        summary = run_benchmark(_config(raw), seeds=[1, 2])
        assert summary["seeds"] == [1, 2]
        assert set(summary["orderings"]) == {3, 5}
        for counts in summary["orderings"].values():
            assert 0 <= counts["cauchy_over_noisy"] <= 2
            assert counts["cauchy_over_tv"] == 0
        assert isinstance(summary["noisy_monotone"], bool)

    def test_needs_seeds(self, small_scene):
        from wakesar.errors import ConfigurationError
        from wakesar.pipeline.experiment_planner import run_benchmark
        with pytest.raises(ConfigurationError):
            run_benchmark(_config(small_scene), seeds=[])


# ─────────────────────────────────────────────────────────────────────────────
# Report Engine Tests
# ─────────────────────────────────────────────────────────────────────────────

def _rows():
    return [
        {"method": "Cauchy", "looks": 3, "psnr_db": 24.0, "smse_db": 12.0, "capped": False},
        {"method": "Noisy", "looks": 3, "psnr_db": 30.0, "smse_db": 5.0, "capped": False},
        {"method": "L1", "looks": 3, "psnr_db": 22.5, "smse_db": 13.0, "capped": False, "tuned_scale": 2.0},
        {"method": "Noisy", "looks": 5, "psnr_db": 19.0, "smse_db": 7.0, "capped": False},
        {"method": "Cauchy", "looks": 5, "psnr_db": 999.0, "smse_db": 999.0, "capped": True},
    ]


class TestReportEngine:
    def test_method_order(self):
        from wakesar.pipeline.report_engine import ReportEngine
        engine = ReportEngine(_rows())
        assert engine.methods == ["Noisy", "L1", "Cauchy"]
        assert engine.looks == [3, 5]

    def test_best_restoration_marked(self):
        """The noisy baseline is never starred, even when it scores highest."""
        from wakesar.pipeline.report_engine import ReportEngine
        engine = ReportEngine(_rows())
        assert engine.is_best("Cauchy", 3, "psnr_db")
        assert engine.is_best("L1", 3, "smse_db")
        assert not engine.is_best("Noisy", 3, "psnr_db")

    def test_text_table(self):
        from wakesar.pipeline.report_engine import ReportEngine
        lines = ReportEngine(_rows()).to_text().splitlines()
        assert lines[0].split()[0] == "Method"
        assert lines[2].startswith("Noisy")
        cauchy = next(line for line in lines if line.startswith("Cauchy"))
        assert "24.000*" in cauchy
        assert "capped*" in cauchy
        l1 = next(line for line in lines if line.startswith("L1"))
        assert l1.rstrip().endswith("-")

    def test_csv_and_json(self):
        import csv
        import io
        from wakesar.pipeline.report_engine import CSV_FIELDS, ReportEngine
        engine = ReportEngine(_rows())
        records = list(csv.DictReader(io.StringIO(engine.to_csv())))
        assert list(records[0]) == CSV_FIELDS
        assert len(records) == 5
        l1 = next(r for r in records if r["method"] == "L1")
        assert l1["tuned_scale"] == "2.0"
        assert l1["best_smse"] == "True"
        data = json.loads(engine.to_json())
        assert data["looks"] == [3, 5]
        assert sum(row["best_psnr"] for row in data["rows"]) == 2

    def test_write_formats(self, tmp_path):
        from wakesar.pipeline.report_engine import ReportEngine
        paths = ReportEngine(_rows()).write(tmp_path, ["text", "json"])
        assert set(paths) == {"text", "json"}
        assert (tmp_path / "results.txt").exists()
        assert not (tmp_path / "results.csv").exists()


# ─────────────────────────────────────────────────────────────────────────────
# Acceptance (slow)
# ─────────────────────────────────────────────────────────────────────────────

@pytest.mark.slow
@pytest.mark.parametrize("preset", ["image-1", "image-2"])
def test_preset_benchmark_cauchy_beats_noisy(preset, tmp_path):
    """On both preset scenes the tuned Cauchy restoration beats the noisy input at every L."""
    from wakesar.pipeline.experiment_planner import ExperimentPlanner
    from wakesar.pipeline.validation_engine import load_config
    config = load_config(overrides={"output": {"png": False}}, preset=preset, scale="desk")
    result = ExperimentPlanner(config, output_dir=tmp_path).run()
    rows = result["rows"]
    for looks in config.noise.looks:
        noisy = next(r for r in rows if r["method"] == "Noisy" and r["looks"] == looks)
        cauchy = next(r for r in rows if r["method"] == "Cauchy" and r["looks"] == looks)
        assert cauchy["psnr_db"] > noisy["psnr_db"]
        assert cauchy["smse_db"] > noisy["smse_db"]


@pytest.fixture(scope="module")
def image1_benchmark():
    from wakesar.pipeline.experiment_planner import run_benchmark
    from wakesar.pipeline.validation_engine import load_config
    config = load_config(overrides={"output": {"png": False}}, preset="image-1", scale="desk")
    return config, run_benchmark(config, seeds=list(range(1, 11)))


@pytest.mark.slow
class TestSeedOrderings:
    """Method orderings counted over ten seeds on the first preset scene."""

    def test_cauchy_beats_noisy_at_high_looks(self, image1_benchmark):
        config, summary = image1_benchmark
        for looks in (5, 7):
            if looks in config.noise.looks:
                assert summary["orderings"][looks]["cauchy_over_noisy"] == 10

    def test_cauchy_beats_l1_at_every_look_count(self, image1_benchmark):
        config, summary = image1_benchmark
        for looks in config.noise.looks:
            assert summary["orderings"][looks]["cauchy_over_l1"] >= 9

    def test_cauchy_beats_tv_at_high_looks(self, image1_benchmark):
        config, summary = image1_benchmark
        for looks in (5, 7):
            if looks in config.noise.looks:
                assert summary["orderings"][looks]["cauchy_over_tv"] >= 7

    def test_noisy_scores_rise_with_looks(self, image1_benchmark):
        _, summary = image1_benchmark
        assert summary["noisy_monotone"] is True


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
