"""
ExperimentPlanner: Benchmark Orchestrator
=========================================
Execution order of one experiment:

  1. Validate and hash the resolved configuration
  2. Simulate the speckle-free scene (sea + wake -> NRCS -> velocity bunching)
  3. Apply L-look speckle for every configured L
  4. Despeckle every (L, regulariser) cell, tuning the γ/λ scale by PSNR
     against the speckle-free image when enabled
  5. Score noisy and restored images (PSNR, S/MSE)
  6. Write rasters, sidecars, the results table and the run record

Cells of step 4 may run concurrently; their results are merged in
(L, regulariser) order so outputs do not depend on the worker count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from wakesar.config import settings
from wakesar.despeckling.metrics import score
from wakesar.despeckling.prox_solvers import DespeckleResult, run_despeckle, tune_regulariser
from wakesar.despeckling.speckle import apply_speckle
from wakesar.errors import ConfigurationError
from wakesar.models import ExperimentConfig, IntensityImage, RegulariserSpec, SpeckleParams
from wakesar.pipeline.report_engine import ReportEngine, method_label
from wakesar.rasters import canonical_json, config_hash, save_image
from wakesar.simulation.sar_imaging import render
from wakesar.simulation.sea_surface import synthesize
from wakesar.simulation.wake import composite_surface, wake_elevation

logger = logging.getLogger(__name__)


def speckle_seed(noise_seed: int, looks: int) -> int:
    """Independent, reproducible speckle stream per look count."""
    return int(np.random.SeedSequence([noise_seed, looks]).generate_state(1)[0])


def simulate_scene(config: ExperimentConfig) -> IntensityImage:
    """Speckle-free image of the configured sea (and ship) scene."""
    scene = config.scene
    surface = synthesize(
        scene.spectrum, scene.grid, scene.wavenumber_bins, scene.direction_bins,
        t=scene.time, seed=scene.seed, geometry=config.radar,
    )
    if scene.ship is not None:
        surface = composite_surface(surface, wake_elevation(scene.grid, scene.ship, config.wake_quadrature))
    return render(surface, config.radar, scene.spectrum, config.render)


class ExperimentPlanner:
    """
    Runs one experiment step by step, keeping intermediate images in memory
    and an ordered audit trail of what was done.
    """

    def __init__(self, config: ExperimentConfig, output_dir: Path | None = None,
                 workers: int | None = None, write_outputs: bool = True):
        self.config = config
        self.resolved = config.model_dump(mode="json", by_alias=True)
        self.config_hash = config_hash(self.resolved)
        self.run_id = self.config_hash[:12]
        self.output_dir = Path(output_dir or config.output.directory or settings.output_dir / config.name)
        self.workers = max(1, workers or settings.workers)
        self.write_outputs = write_outputs

        self.clean: IntensityImage | None = None
        self.noisy: dict[int, IntensityImage] = {}
        self.restored: dict[tuple[int, str], DespeckleResult] = {}
        self.tuned_scales: dict[tuple[int, str], float] = {}
        self.rows: list[dict] = []

        self.state: dict = {
            "run_id": self.run_id,
            "name": config.name,
            "config_hash": self.config_hash,
            "status": "idle",
            "outputs": {},
            "warnings": [],
            "audit_trail": [],
        }

    # ─────────────────────────────────────────────────────────────────────────
    # Audit
    # ─────────────────────────────────────────────────────────────────────────
    def _log(self, step: str, detail: str = "") -> None:
        self.state["audit_trail"].append({"step": step, "detail": detail})
        logger.info("[%s] %s %s", self.run_id, step, detail)

    def _provenance(self, **seeds) -> dict:
        return {"run_id": self.run_id, "config_hash": self.config_hash,
                "seeds": {"scene": self.config.scene.seed, **seeds}}

    def _save(self, key: str, image: IntensityImage, **seeds) -> None:
        if not self.write_outputs:
            return
        self.state["outputs"][key] = save_image(
            image, self.output_dir, key, png=self.config.output.png, provenance=self._provenance(**seeds)
        )

    # ─────────────────────────────────────────────────────────────────────────
    # Steps
    # ─────────────────────────────────────────────────────────────────────────
    def simulate(self) -> IntensityImage:
        self.state["status"] = "simulating"
        self.clean = simulate_scene(self.config)
        diagnostics = self.clean.metadata.get("diagnostics", {})
        self._log(
            "Scene simulated",
            f"{self.clean.shape[0]}x{self.clean.shape[1]} pixels, "
            f"shadowed={diagnostics.get('shadowed_facets', 0)}, "
            f"clamped={diagnostics.get('clamped_facets', 0)}",
        )
        self._save("clean", self.clean)
        return self.clean

    def speckle(self, looks: list[int] | None = None) -> dict[int, IntensityImage]:
        if self.clean is None:
            self.simulate()
        self.state["status"] = "speckling"
        for value in looks or self.config.noise.looks:
            seed = speckle_seed(self.config.noise.seed, value)
            self.noisy[value] = apply_speckle(self.clean, SpeckleParams(looks=value, seed=seed))
            self._log("Speckle applied", f"L={value} seed={seed}")
            self._save(f"noisy_L{value}", self.noisy[value], noise=self.config.noise.seed, speckle=seed)
        return self.noisy

    def _despeckle_cell(self, looks: int, spec: RegulariserSpec,
                        tune: bool) -> tuple[DespeckleResult, float | None]:
        options = {
            "levels": self.config.despeckle.levels,
            "wavelet_name": self.config.despeckle.wavelet,
            "boundary_mode": self.config.despeckle.boundary_mode,
        }
        noisy = self.noisy[looks]
        if tune:
            tuned = tune_regulariser(noisy, self.clean, spec, self.config.despeckle.tuning_grid, **options)
            return tuned.result, tuned.scale
        return run_despeckle(noisy, spec, **options), None

    def despeckle(self, looks: list[int] | None = None, regularisers: list[RegulariserSpec] | None = None,
                  tune: bool | None = None) -> dict[tuple[int, str], DespeckleResult]:
        if not self.noisy:
            self.speckle()
        tune = self.config.despeckle.tune if tune is None else tune
        if tune and self.clean is None:
            raise ConfigurationError("tuning needs the speckle-free reference image")
        self.state["status"] = "despeckling"
        cells = [
            (value, spec)
            for value in (looks or sorted(self.noisy))
            for spec in (regularisers or self.config.despeckle.regularisers)
        ]
        missing = [value for value, _ in cells if value not in self.noisy]
        if missing:
            raise ConfigurationError(f"no speckled image for L={sorted(set(missing))}")

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(self._despeckle_cell, value, spec, tune) for value, spec in cells]
            outcomes = [future.result() for future in futures]

        for (value, spec), (result, scale) in zip(cells, outcomes):
            key = (value, spec.kind)
            self.restored[key] = result
            if scale is not None:
                self.tuned_scales[key] = scale
            for report in result.reports:
                self.state["warnings"].extend(report.warnings)
            iterations = sum(r.iterations for r in result.reports)
            self._log(
                "Despeckled",
                f"L={value} {spec.kind}: {len(result.reports)} solves, {iterations} iterations"
                + (f", tuned scale={scale:g}" if scale is not None else ""),
            )
            self._save(f"restored_{spec.kind}_L{value}", result.image)
        return self.restored

    def evaluate(self) -> list[dict]:
        if self.clean is None:
            raise ConfigurationError("nothing to evaluate: the scene has not been simulated")
        self.state["status"] = "evaluating"
        rows = []
        for value in sorted(self.noisy):
            report = score(self.clean, self.noisy[value], "clean", f"noisy_L{value}")
            rows.append({"method": "Noisy", "looks": value, **report.model_dump()})
        for (value, kind), result in sorted(self.restored.items()):
            report = score(self.clean, result.image, "clean", f"restored_{kind}_L{value}")
            row = {"method": method_label(kind), "looks": value, **report.model_dump()}
            if (value, kind) in self.tuned_scales:
                row["tuned_scale"] = self.tuned_scales[(value, kind)]
            rows.append(row)
        self.rows = rows
        self._log("Evaluated", f"{len(rows)} rows")
        return rows

    def write_reports(self) -> dict[str, str]:
        paths = {}
        if not self.write_outputs:
            return paths
        self.output_dir.mkdir(parents=True, exist_ok=True)
        config_path = self.output_dir / "config.json"
        config_path.write_text(canonical_json(self.resolved), encoding="utf-8")
        paths["config"] = config_path.as_posix()
        if self.rows:
            paths.update(ReportEngine(self.rows).write(self.output_dir, self.config.output.report_formats))
        self.state["outputs"]["reports"] = paths
        return paths

    def write_run_record(self) -> Path | None:
        if not self.write_outputs:
            return None
        path = self.output_dir / "run.json"
        path.write_text(canonical_json(self.state), encoding="utf-8")
        return path

    def run(self) -> dict:
        """Full experiment; returns the run state with the results rows."""
        self._log("Run started", f"config {self.config_hash[:12]}")
        try:
            self.simulate()
            self.speckle()
            self.despeckle()
            self.evaluate()
            self.write_reports()
        except Exception as exc:
            self.state["status"] = "failed"
            self._log("Run failed", f"{type(exc).__name__}: {exc}")
            self.write_run_record()
            raise
        self.state["status"] = "completed"
        self._log("Run completed")
        self.write_run_record()
        return {**self.state, "rows": self.rows}


# ── Benchmark ────────────────────────────────────────────────────────────────

def _with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    data = config.model_dump(by_alias=True)
    data["scene"]["seed"] = seed
    data["noise"]["seed"] = seed
    data["name"] = f"{config.name}-seed{seed}"
    return ExperimentConfig(**data)


def _metric(rows: list[dict], method: str, looks: int, key: str) -> float | None:
    for row in rows:
        if row["method"] == method and row["looks"] == looks:
            return row[key]
    return None


def run_benchmark(config: ExperimentConfig, seeds: list[int], write_outputs: bool = False,
                  workers: int | None = None) -> dict:
    """Repeat the experiment over seeds and count per-L method orderings."""
    if not seeds:
        raise ConfigurationError("benchmark needs at least one seed")
    per_seed = {}
    for seed in seeds:
        planner = ExperimentPlanner(_with_seed(config, seed), workers=workers, write_outputs=write_outputs)
        per_seed[seed] = planner.run()["rows"]

    looks = sorted(config.noise.looks)
    summary = {}
    for value in looks:
        counts = {"cauchy_over_noisy": 0, "cauchy_over_l1": 0, "cauchy_over_tv": 0}
        for rows in per_seed.values():
            cauchy = _metric(rows, "Cauchy", value, "psnr_db")
            cauchy_smse = _metric(rows, "Cauchy", value, "smse_db")
            if cauchy is None:
                continue
            noisy = _metric(rows, "Noisy", value, "psnr_db")
            l1 = _metric(rows, "L1", value, "psnr_db")
            tv = _metric(rows, "TV", value, "psnr_db")
            if noisy is not None and cauchy > noisy:
                counts["cauchy_over_noisy"] += 1
            if l1 is not None and cauchy >= l1 and cauchy_smse >= _metric(rows, "L1", value, "smse_db"):
                counts["cauchy_over_l1"] += 1
            if tv is not None and cauchy >= tv:
                counts["cauchy_over_tv"] += 1
        summary[value] = counts

    noisy_monotone = all(
        all(
            _metric(rows, "Noisy", a, "psnr_db") < _metric(rows, "Noisy", b, "psnr_db")
            for a, b in zip(looks, looks[1:])
        )
        for rows in per_seed.values()
    )
    logger.info("Benchmark over %d seeds: %s", len(seeds), summary)
    return {"seeds": list(seeds), "rows": per_seed, "orderings": summary, "noisy_monotone": noisy_monotone}
