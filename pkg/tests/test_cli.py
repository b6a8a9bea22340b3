"""
Tests for the command-line front end.

Run with: pytest tests/ -v
"""
import csv
import json
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))


@pytest.fixture
def sea_config(tmp_path, small_scene):
    """Small sea-only experiment written to disk."""
    small_scene["scene"]["ship"] = None
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(small_scene), encoding="utf-8")
    return path


class TestUsage:
    def test_unknown_flag_is_a_configuration_error(self, capsys):
        from wakesar.cli import main
        assert main(["simulate", "--no-such-flag"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_command(self):
        from wakesar.cli import main
        assert main([]) == 1

    def test_bad_looks_list(self, tmp_path):
        from wakesar.cli import main
        assert main(["speckle", "--input", str(tmp_path / "clean.wsr"), "--looks", "three"]) == 1

    def test_missing_raster(self, tmp_path, capsys):
        from wakesar.cli import main
        assert main(["speckle", "--input", str(tmp_path / "clean.wsr"), "--looks", "3"]) == 1
        assert "raster not found" in capsys.readouterr().err

    def test_invalid_config_lists_field_errors(self, tmp_path, small_scene, capsys):
        from wakesar.cli import main
        small_scene["scene"]["grid"]["nx"] = -4
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(small_scene), encoding="utf-8")
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "out")]) == 1
        assert "scene.grid.nx" in capsys.readouterr().err


class TestCommands:
    def test_simulate_writes_clean_scene(self, tmp_path, sea_config, capsys):
        from wakesar.cli import main
        from wakesar.rasters import read_raster
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(sea_config), "--out", str(out)]) == 0
        assert read_raster(out / "clean.wsr").shape == (64, 64)
        assert (out / "config.json").exists()
        record = json.loads((out / "run.json").read_text(encoding="utf-8"))
        assert record["audit_trail"][0]["step"] == "Scene simulated"
        assert "64x64" in capsys.readouterr().out

    def test_paper_scale_accepted(self, tmp_path, sea_config):
        """--scale paper is a valid choice and is recorded with the run configuration."""
        from wakesar.cli import main
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(sea_config), "--scale", "paper", "--out", str(out)]) == 0
        config = json.loads((out / "config.json").read_text(encoding="utf-8"))
        assert config["scale"] == "paper"
        assert config["scene"]["grid"]["nx"] == 64

    def test_unknown_scale_rejected(self, tmp_path, sea_config):
        from wakesar.cli import main
        assert main(["simulate", "--config", str(sea_config), "--scale", "full", "--out", str(tmp_path)]) == 1

    def test_speckle_despeckle_evaluate(self, tmp_path, sea_config, capsys):
        """Each stage reads the rasters and sidecars the previous one wrote."""
        from wakesar.cli import main
        from wakesar.rasters import read_raster
        out = tmp_path / "run"
        assert main(["simulate", "--config", str(sea_config), "--out", str(out)]) == 0
        assert main(["speckle", "--input", str(out / "clean.wsr"), "--looks", "3,5", "--seed", "4",
                     "--no-png"]) == 0
        noisy = read_raster(out / "noisy_L3.wsr")
        assert noisy.metadata["looks"] == 3
        assert (out / "noisy_L5.wsr").exists()

        assert main(["despeckle", "--input", str(out / "noisy_L3.wsr"), "--reg", "l1",
                     "--max-iter", "20", "--levels", "2", "--no-png"]) == 0
        restored = read_raster(out / "restored_l1_L3.wsr")
        assert restored.metadata["despeckle"]["regulariser"] == "l1"
        report = json.loads((out / "restored_l1_L3_report.json").read_text(encoding="utf-8"))
        assert len(report["subbands"]) == 6
        assert report["tuned_scale"] is None

        results = tmp_path / "results"
        assert main(["evaluate", "--reference", str(out / "clean.wsr"), str(out / "noisy_L3.wsr"),
                     str(out / "restored_l1_L3.wsr"), "--out", str(results), "--formats", "csv"]) == 0
        with open(results / "results.csv", newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert [(row["method"], row["looks"]) for row in rows] == [("Noisy", "3"), ("L1", "3")]
        assert not (results / "results.txt").exists()
        assert "Noisy" in capsys.readouterr().out

    def test_despeckle_without_look_count(self, tmp_path, textured_image):
        from wakesar.cli import main
        from wakesar.rasters import write_raster
        path = write_raster(tmp_path / "bare.wsr", textured_image)
        assert main(["despeckle", "--input", str(path), "--no-png"]) == 1
        assert main(["despeckle", "--input", str(path), "--looks", "5", "--reg", "l1",
                     "--max-iter", "5", "--levels", "2", "--no-png"]) == 0
        assert (tmp_path / "restored_l1_L5.wsr").exists()

    def test_pipeline(self, tmp_path, sea_config, capsys):
        from wakesar.cli import main
        out = tmp_path / "run"
        code = main(["pipeline", "--config", str(sea_config), "--out", str(out), "--looks", "3",
                     "--reg", "l1", "--max-iter", "20", "--no-tune", "--no-png"])
        assert code == 0
        table = capsys.readouterr().out
        assert "Noisy" in table and "L1" in table
        record = json.loads((out / "run.json").read_text(encoding="utf-8"))
        assert record["status"] == "completed"
        assert (out / "restored_l1_L3.wsr").exists()

    def test_pipeline_rerun_is_byte_identical(self, tmp_path, sea_config):
        from wakesar.cli import main
        out = tmp_path / "run"
        argv = ["pipeline", "--config", str(sea_config), "--out", str(out), "--looks", "3",
                "--reg", "l1", "--max-iter", "20", "--no-tune", "--no-png"]

        def snapshot():
            return {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}

        assert main(argv) == 0
        first = snapshot()
        assert main(argv) == 0
        second = snapshot()
        assert first
        assert first.keys() == second.keys()
        for name in first:
            assert first[name] == second[name], name


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
