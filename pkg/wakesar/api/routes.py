"""
FastAPI API Routes for wakesar.

Endpoints:
  GET  /health                 - Health check
  GET  /api/presets            - Scene presets and scales
  POST /api/simulate           - Validate a config and render the speckle-free scene
  POST /api/speckle            - Add L-look speckle to a simulated run
  POST /api/despeckle          - Restore one speckled image with one regulariser
  POST /api/evaluate           - Score every noisy/restored image of a run
  POST /api/pipeline           - Run a whole experiment
  GET  /api/runs/{run_id}      - Run state and audit trail
"""
import logging
from collections import OrderedDict

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from wakesar import __version__
from wakesar.config import settings
from wakesar.errors import ConfigurationError, NumericalError
from wakesar.models import IntensityImage, RegulariserSpec
from wakesar.pipeline.experiment_planner import ExperimentPlanner
from wakesar.pipeline.report_engine import ReportEngine
from wakesar.pipeline.validation_engine import load_config, load_scenes

logger = logging.getLogger(__name__)

router = APIRouter()
# In-memory planners keyed by run id, least recently used first
_runs: OrderedDict[str, ExperimentPlanner] = OrderedDict()


# ── Request Models ───────────────────────────────────────────────────────────

class SimulateRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    preset: str | None = None
    scale: str | None = None
    write_outputs: bool = True


class SpeckleRequest(BaseModel):
    run_id: str
    looks: list[int] | None = None


class DespeckleRequest(BaseModel):
    run_id: str
    looks: int
    regulariser: dict = Field(default_factory=lambda: {"kind": "cauchy"})
    tune: bool = False


class EvaluateRequest(BaseModel):
    run_id: str


# ── Helpers ──────────────────────────────────────────────────────────────────

def _statistics(image: IntensityImage) -> dict:
    pixels = image.pixels
    return {
        "shape": list(image.shape),
        "mean": float(pixels.mean()),
        "min": float(pixels.min()),
        "max": float(pixels.max()),
    }


def _planner(run_id: str) -> ExperimentPlanner:
    planner = _runs.get(run_id)
    if planner is None:
        raise HTTPException(status_code=404, detail="Run not found. Please call /api/simulate first.")
    _runs.move_to_end(run_id)
    return planner


def _remember(planner: ExperimentPlanner) -> None:
    _runs[planner.run_id] = planner
    _runs.move_to_end(planner.run_id)
    while len(_runs) > settings.max_runs:
        evicted, _ = _runs.popitem(last=False)
        logger.info("Dropped run %s from memory (%d runs kept)", evicted, settings.max_runs)


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, ConfigurationError):
        detail = getattr(exc, "errors", None) or str(exc)
        return HTTPException(status_code=422, detail=detail)
    if isinstance(exc, NumericalError):
        return HTTPException(status_code=500, detail=str(exc))
    return HTTPException(status_code=500, detail=f"{type(exc).__name__}: {exc}")


def _new_planner(request: SimulateRequest) -> ExperimentPlanner:
    config = load_config(overrides=request.config, preset=request.preset, scale=request.scale)
    planner = ExperimentPlanner(config, write_outputs=request.write_outputs)
    _remember(planner)
    return planner


# ── Endpoints ────────────────────────────────────────────────────────────────

@router.get("/health", tags=["Health"])
async def health_check():
    return {"status": "ok", "version": __version__}


@router.get("/api/presets", tags=["Configuration"])
async def list_presets():
    scenes = load_scenes()
    return {
        "presets": {name: entry.get("description", "") for name, entry in sorted(scenes["presets"].items())},
        "scales": {name: entry.get("description", "") for name, entry in sorted(scenes["scales"].items())},
    }


@router.post("/api/simulate", tags=["Pipeline"])
def simulate(request: SimulateRequest):
    """Render the speckle-free scene of a (partial, defaulted) configuration."""
    try:
        planner = _new_planner(request)
        image = planner.simulate()
    except (ConfigurationError, NumericalError) as exc:
        raise _http_error(exc) from exc
    return {
        "run_id": planner.run_id,
        "status": planner.state["status"],
        "statistics": _statistics(image),
        "diagnostics": image.metadata.get("diagnostics", {}),
        "outputs": planner.state["outputs"],
    }


@router.post("/api/speckle", tags=["Pipeline"])
def speckle(request: SpeckleRequest):
    planner = _planner(request.run_id)
    try:
        noisy = planner.speckle(request.looks)
    except (ConfigurationError, NumericalError) as exc:
        raise _http_error(exc) from exc
    return {
        "run_id": planner.run_id,
        "images": {str(value): _statistics(image) for value, image in sorted(noisy.items())},
        "outputs": planner.state["outputs"],
    }


@router.post("/api/despeckle", tags=["Pipeline"])
def despeckle(request: DespeckleRequest):
    planner = _planner(request.run_id)
    try:
        spec = RegulariserSpec(**request.regulariser)
        if request.looks not in planner.noisy:
            planner.speckle([request.looks])
        results = planner.despeckle([request.looks], [spec], tune=request.tune)
    except (ConfigurationError, NumericalError) as exc:
        raise _http_error(exc) from exc
    result = results[(request.looks, spec.kind)]
    return {
        "run_id": planner.run_id,
        "looks": request.looks,
        "regulariser": spec.kind,
        "statistics": _statistics(result.image),
        "subbands": [report.as_dict() for report in result.reports],
    }


@router.post("/api/evaluate", tags=["Pipeline"])
def evaluate(request: EvaluateRequest):
    planner = _planner(request.run_id)
    try:
        rows = planner.evaluate()
    except (ConfigurationError, NumericalError) as exc:
        raise _http_error(exc) from exc
    return {"run_id": planner.run_id, "rows": rows, "table": ReportEngine(rows).to_text()}


@router.post("/api/pipeline", tags=["Pipeline"])
def pipeline(request: SimulateRequest):
    try:
        planner = _new_planner(request)
        result = planner.run()
    except (ConfigurationError, NumericalError) as exc:
        raise _http_error(exc) from exc
    return {
        "run_id": planner.run_id,
        "status": result["status"],
        "rows": result["rows"],
        "table": ReportEngine(result["rows"]).to_text(),
        "outputs": result["outputs"],
    }


@router.get("/api/runs/{run_id}", tags=["Pipeline"])
async def get_run(run_id: str):
    planner = _planner(run_id)
    return {**planner.state, "rows": planner.rows}
