"""
ValidationEngine

Responsibilities:
- Resolve an experiment configuration: scale defaults <- preset <- user JSON
- Validate it field by field (pydantic) and across sections (grid/radar
  tiling, wavelet depth, Cauchy step regime)
- Report {is_valid, missing_fields, warnings, errors}; load_config raises
  ConfigValidationError when the result is invalid
"""
import copy
import json
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from wakesar.config import settings
from wakesar.despeckling.prox_solvers import FIDELITY_LIPSCHITZ
from wakesar.despeckling.wavelet import max_levels
from wakesar.errors import ConfigurationError, ConfigValidationError
from wakesar.models import ExperimentConfig, field_messages

logger = logging.getLogger(__name__)

KNOWLEDGE_DIR = Path(__file__).resolve().parent.parent / "knowledge"
SCENES_FILE = KNOWLEDGE_DIR / "scenes.json"

# Keys in scenes.json that document a preset rather than configure it
_DESCRIPTIVE_KEYS = {"description"}


def _load_json(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def load_scenes() -> dict:
    return _load_json(SCENES_FILE)


def preset_names() -> list[str]:
    return sorted(load_scenes()["presets"])


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; values in override win, lists are replaced."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _strip(entry: dict) -> dict:
    return {k: v for k, v in entry.items() if k not in _DESCRIPTIVE_KEYS}


def resolve_config(raw: dict | None = None, preset: str | None = None,
                   scale: str | None = None) -> dict:
    """Layer scale defaults, then the preset, then the user's values."""
    raw = dict(raw or {})
    scenes = load_scenes()
    preset = preset or raw.get("preset")
    scale = scale or raw.get("scale") or settings.default_scale

    if scale not in scenes["scales"]:
        raise ConfigValidationError([f"scale: unknown scale '{scale}', expected one of {sorted(scenes['scales'])}"])
    resolved = _strip(scenes["scales"][scale])
    if preset is not None:
        if preset not in scenes["presets"]:
            raise ConfigValidationError(
                [f"preset: unknown preset '{preset}', expected one of {sorted(scenes['presets'])}"]
            )
        resolved = deep_merge(resolved, _strip(scenes["presets"][preset]))
    resolved = deep_merge(resolved, raw)
    resolved["preset"] = preset
    resolved["scale"] = scale
    return resolved


class ConfigValidator:
    """
    Validates a resolved experiment configuration.
    Returns validation status plus field-level errors and warnings.
    """

    def validate(self, raw: dict) -> dict:
        missing_fields = []
        warnings = []
        errors = []
        config = None

        try:
            config = ExperimentConfig(**raw)
        except ConfigValidationError as exc:
            errors.extend(exc.errors)
        except ValidationError as exc:
            errors.extend(field_messages(exc))

        for message in errors:
            if message.endswith("Field required"):
                missing_fields.append(message.split(":", 1)[0])

        if config is not None:
            errors.extend(self._cross_section_errors(config))
            warnings.extend(self._warnings(config))

        is_valid = not errors
        result = {
            "is_valid": is_valid,
            "missing_fields": missing_fields,
            "warnings": warnings,
            "errors": errors,
            "config": config if is_valid else None,
        }
        if is_valid:
            logger.info("Configuration '%s' is valid", config.name)
        else:
            logger.warning("Configuration rejected: %s", errors)
        return result

    def _cross_section_errors(self, config: ExperimentConfig) -> list[str]:
        errors = []
        grid, radar = config.scene.grid, config.radar
        factors = []
        for axis, facet, resolution, count in (
            ("azimuth", grid.dx, radar.azimuth_resolution, grid.nx),
            ("range", grid.dy, radar.range_resolution, grid.ny),
        ):
            ratio = resolution / facet
            if ratio < 1.0 - 1e-9 or abs(ratio - round(ratio)) > 1e-6:
                errors.append(
                    f"radar.{axis}_resolution: {resolution} m is not a whole multiple of the {facet} m facet"
                )
                continue
            factor = int(round(ratio))
            if count % factor:
                errors.append(f"scene.grid: {count} facets do not tile into {axis} pixels of {factor} facets")
            factors.append(count // factor)

        if len(factors) == 2:
            try:
                limit = max_levels(tuple(factors), config.despeckle.wavelet)
            except ConfigurationError as exc:
                errors.append(f"despeckle.wavelet: {exc}")
            else:
                if config.despeckle.levels > limit:
                    errors.append(
                        f"despeckle.levels: {config.despeckle.levels} levels exceed the {limit} "
                        f"supported by a {factors[0]}x{factors[1]} image"
                    )
        return errors

    def _warnings(self, config: ExperimentConfig) -> list[str]:
        warnings = []
        if config.scene.ship is None:
            warnings.append("scene.ship is null: the scene contains no wake")
        for index, spec in enumerate(config.despeckle.regularisers):
            if spec.kind != "cauchy":
                continue
            limit = 1.0 / FIDELITY_LIPSCHITZ
            if spec.params.gamma is not None:
                limit = min(limit, 4.0 * (spec.params.gamma * spec.params.gamma_scale) ** 2)
            if spec.params.omega > limit:
                warnings.append(
                    f"despeckle.regularisers.{index}.params.omega: {spec.params.omega} exceeds "
                    f"the step bound {limit:.4g} and will be clamped"
                )
        if config.despeckle.tune and 1.0 not in config.despeckle.tuning_grid:
            warnings.append("despeckle.tuning_grid does not contain 1.0 (the untuned default)")
        if config.radar.radar_wavenumber / config.render.separation_divisor < config.scene.grid.nyquist:
            warnings.append(
                "render.separation_divisor: the long/short wave split lies below the facet Nyquist "
                "wavenumber; some resolved waves are excluded from the hydrodynamic modulation"
            )
        return warnings


def load_config(path: str | Path | None = None, overrides: dict | None = None,
                preset: str | None = None, scale: str | None = None) -> ExperimentConfig:
    """Read, resolve and validate an experiment; raises ConfigValidationError."""
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"configuration file not found: {path}")
        try:
            raw = _load_json(path)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{path}: top-level JSON value must be an object")
    raw = deep_merge(raw, overrides or {})
    result = ConfigValidator().validate(resolve_config(raw, preset, scale))
    if not result["is_valid"]:
        raise ConfigValidationError(result["errors"], result["warnings"])
    for warning in result["warnings"]:
        logger.warning(warning)
    return result["config"]
