"""
Command-line front end.

    python -m wakesar.cli simulate   --config cfg.json --preset image-1 --out runs/a
    python -m wakesar.cli speckle    --input runs/a/clean.wsr --looks 3,5,7 --seed 1
    python -m wakesar.cli despeckle  --input runs/a/noisy_L5.wsr --reg cauchy --gamma 0.1
    python -m wakesar.cli evaluate   --reference runs/a/clean.wsr runs/a/restored_*.wsr
    python -m wakesar.cli pipeline   --preset image-1 --scale desk
    python -m wakesar.cli serve      --port 8000

Exit status: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from wakesar import __version__
from wakesar.config import configure_logging, settings
from wakesar.despeckling.metrics import score
from wakesar.despeckling.prox_solvers import run_despeckle, tune_regulariser
from wakesar.despeckling.speckle import apply_speckle
from wakesar.errors import ConfigurationError, ConfigValidationError, exit_code_for
from wakesar.models import RegulariserSpec, SpeckleParams
from wakesar.pipeline.experiment_planner import ExperimentPlanner, run_benchmark, speckle_seed
from wakesar.pipeline.report_engine import ReportEngine, method_label
from wakesar.pipeline.validation_engine import load_config
from wakesar.rasters import canonical_json, read_raster, save_image

logger = logging.getLogger("wakesar.cli")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit status 1)."""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


# ── Config overrides from flags ──────────────────────────────────────────────

def _prox_params(args) -> dict:
    params = {}
    for flag, key in (("gamma", "gamma"), ("omega", "omega"), ("lam", "lambda"), ("max_iter", "max_iter")):
        value = getattr(args, flag, None)
        if value is not None:
            params[key] = value
    return params


def _overrides(args) -> dict:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides.setdefault("scene", {})["seed"] = args.seed
        overrides.setdefault("noise", {})["seed"] = args.seed
    if getattr(args, "looks", None):
        overrides.setdefault("noise", {})["looks"] = args.looks
    if getattr(args, "out", None):
        overrides.setdefault("output", {})["directory"] = str(args.out)
    if getattr(args, "no_png", False):
        overrides.setdefault("output", {})["png"] = False
    despeckle = {}
    if getattr(args, "reg", None):
        despeckle["regularisers"] = [{"kind": kind, "params": _prox_params(args)} for kind in args.reg]
    if getattr(args, "levels", None) is not None:
        despeckle["levels"] = args.levels
    if getattr(args, "wavelet", None):
        despeckle["wavelet"] = args.wavelet
    if getattr(args, "no_tune", False):
        despeckle["tune"] = False
    if despeckle:
        overrides["despeckle"] = despeckle
    return overrides


def _config(args):
    return load_config(args.config, _overrides(args), preset=args.preset, scale=args.scale)


# ── Commands ─────────────────────────────────────────────────────────────────

def cmd_simulate(args) -> int:
    planner = ExperimentPlanner(_config(args))
    image = planner.simulate()
    planner.write_reports()
    planner.write_run_record()
    print(f"{planner.run_id}: {image.shape[0]}x{image.shape[1]} image written to {planner.output_dir}")
    return 0


def cmd_speckle(args) -> int:
    clean = read_raster(args.input)
    out = Path(args.out or Path(args.input).parent)
    for value in args.looks:
        seed = speckle_seed(args.seed, value)
        noisy = apply_speckle(clean, SpeckleParams(looks=value, seed=seed))
        paths = save_image(noisy, out, f"noisy_L{value}", png=not args.no_png,
                           provenance={"source": Path(args.input).name, "seeds": {"noise": args.seed, "speckle": seed}})
        print(f"L={value}: {paths['raster']}")
    return 0


def cmd_despeckle(args) -> int:
    noisy = read_raster(args.input)
    if args.looks:
        noisy = noisy.with_pixels(noisy.pixels, looks=args.looks[0],
                                  speckle_sigma2=SpeckleParams(looks=args.looks[0]).sigma2)
    spec = RegulariserSpec(kind=args.reg[0], params=_prox_params(args))
    options = {"levels": args.levels or 3, "wavelet_name": args.wavelet or "db4"}
    if args.reference:
        tuned = tune_regulariser(noisy, read_raster(args.reference), spec, args.tuning_grid, **options)
        result, scale = tuned.result, tuned.scale
    else:
        result, scale = run_despeckle(noisy, spec, **options), None

    out = Path(args.out or Path(args.input).parent)
    stem = f"restored_{spec.kind}" + (f"_L{noisy.metadata['looks']}" if "looks" in noisy.metadata else "")
    paths = save_image(result.image, out, stem, png=not args.no_png,
                       provenance={"source": Path(args.input).name})
    report = {
        "input": Path(args.input).name,
        "regulariser": spec.kind,
        "tuned_scale": scale,
        "subbands": [r.as_dict() for r in result.reports],
    }
    report_path = out / f"{stem}_report.json"
    report_path.write_text(canonical_json(report), encoding="utf-8")
    for r in result.reports:
        print(f"level {r.level} orientation {r.orientation}: {r.iterations} iterations, "
              f"objective {r.final_objective:.6g}")
    print(f"restored image: {paths['raster']}")
    return 0


def cmd_evaluate(args) -> int:
    reference = read_raster(args.reference)
    rows = []
    for path in args.estimates:
        estimate = read_raster(path)
        despeckle = estimate.metadata.get("despeckle")
        method = method_label(despeckle["regulariser"]) if despeckle else "Noisy"
        report = score(reference, estimate, Path(args.reference).name, Path(path).name)
        rows.append({"method": method, "looks": int(estimate.metadata.get("looks", 0)), **report.model_dump()})
    engine = ReportEngine(rows)
    if args.out:
        engine.write(Path(args.out), args.formats)
    print(engine.to_text(), end="")
    return 0


def cmd_pipeline(args) -> int:
    config = _config(args)
    if args.seeds:
        summary = run_benchmark(config, args.seeds, write_outputs=False, workers=args.workers)
        print(json.dumps({"orderings": summary["orderings"], "noisy_monotone": summary["noisy_monotone"]},
                         indent=2, sort_keys=True))
        return 0
    planner = ExperimentPlanner(config, workers=args.workers)
    result = planner.run()
    print(ReportEngine(result["rows"]).to_text(), end="")
    print(f"outputs: {planner.output_dir}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("wakesar.main:app", host=args.host or settings.api_host, port=args.port or settings.api_port)
    return 0


# ── Parser ───────────────────────────────────────────────────────────────────

def _add_scene_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="experiment JSON file")
    parser.add_argument("--preset", help="scene preset (image-1, image-2)")
    parser.add_argument("--scale", choices=["desk", "paper"], help="scene size")
    parser.add_argument("--seed", type=int, help="scene and noise seed")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--no-png", action="store_true", help="skip PNG previews")


def _add_prox_flags(parser: argparse.ArgumentParser, multiple: bool) -> None:
    if multiple:
        parser.add_argument("--reg", choices=["cauchy", "l1", "tv"], action="append",
                            help="regulariser (repeatable)")
    else:
        parser.add_argument("--reg", choices=["cauchy", "l1", "tv"], help="regulariser")
    parser.add_argument("--gamma", type=float, help="Cauchy scale")
    parser.add_argument("--omega", type=float, help="forward-backward step")
    parser.add_argument("--lambda", dest="lam", type=float, help="L1/TV weight")
    parser.add_argument("--max-iter", type=int, help="forward-backward iterations")
    parser.add_argument("--levels", type=int, help="wavelet levels")
    parser.add_argument("--wavelet", help="wavelet name")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wakesar", description="Simulated SAR ship-wake scenes and despeckling.")
    parser.add_argument("--version", action="version", version=f"wakesar {__version__}")
    parser.add_argument("--log-level", help="logging level (default from WAKESAR_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    simulate = sub.add_parser("simulate", help="render a speckle-free scene")
    _add_scene_flags(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    speckle = sub.add_parser("speckle", help="add L-look speckle to a raster")
    speckle.add_argument("--input", type=Path, required=True)
    speckle.add_argument("--looks", type=_int_list, default=[3, 5, 7])
    speckle.add_argument("--seed", type=int, default=1)
    speckle.add_argument("--out", type=Path)
    speckle.add_argument("--no-png", action="store_true")
    speckle.set_defaults(handler=cmd_speckle)

    despeckle = sub.add_parser("despeckle", help="restore a speckled raster")
    despeckle.add_argument("--input", type=Path, required=True)
    despeckle.add_argument("--looks", type=_int_list, help="look count when the raster has no sidecar")
    despeckle.add_argument("--reference", type=Path, help="speckle-free raster; enables scale tuning")
    despeckle.add_argument("--tuning-grid", type=lambda t: [float(v) for v in t.split(",")],
                           default=[0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
    despeckle.add_argument("--out", type=Path)
    despeckle.add_argument("--no-png", action="store_true")
    _add_prox_flags(despeckle, multiple=False)
    despeckle.set_defaults(handler=cmd_despeckle)

    evaluate = sub.add_parser("evaluate", help="score estimates against a reference")
    evaluate.add_argument("--reference", type=Path, required=True)
    evaluate.add_argument("estimates", type=Path, nargs="+")
    evaluate.add_argument("--out", type=Path, help="write results.txt/.csv/.json here")
    evaluate.add_argument("--formats", type=lambda t: t.split(","), default=["text", "csv", "json"])
    evaluate.set_defaults(handler=cmd_evaluate)

    pipeline = sub.add_parser("pipeline", help="simulate, speckle, despeckle and evaluate")
    _add_scene_flags(pipeline)
    _add_prox_flags(pipeline, multiple=True)
    pipeline.add_argument("--looks", type=_int_list)
    pipeline.add_argument("--no-tune", action="store_true", help="skip the PSNR scale search")
    pipeline.add_argument("--workers", type=int, help="concurrent despeckling cells")
    pipeline.add_argument("--seeds", type=_int_list, help="benchmark over these seeds")
    pipeline.set_defaults(handler=cmd_pipeline)

    serve = sub.add_parser("serve", help="start the HTTP API")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        if args.command == "despeckle":
            args.reg = [args.reg or "cauchy"]
        return args.handler(args)
    except ConfigValidationError as exc:
        for message in exc.errors:
            print(f"error: {message}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
