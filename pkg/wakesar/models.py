"""
Domain models for wakesar.

Parameter models are frozen pydantic models: invalid values raise
ConfigValidationError with one message per offending field. Gridded values
(IntensityImage) are frozen dataclasses holding read-only numpy arrays.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from wakesar.errors import ConfigurationError, ConfigValidationError

SPEED_OF_LIGHT = 299_792_458.0
STANDARD_GRAVITY = 9.81


def field_messages(exc: ValidationError) -> list[str]:
    """Flatten a pydantic ValidationError into 'a.b.c: message' strings."""
    messages = []
    for err in exc.errors():
        location = ".".join(str(part) for part in err.get("loc", ())) or "<root>"
        messages.append(f"{location}: {err.get('msg', 'invalid value')}")
    return messages


class ParamsModel(BaseModel):
    """Base for immutable parameter records."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    def __init__(self, **data: Any):
        try:
            super().__init__(**data)
        except ValidationError as exc:
            raise ConfigValidationError(field_messages(exc)) from exc


# ── Scene ────────────────────────────────────────────────────────────────────

class SpectrumParams(ParamsModel):
    """Wind-sea parameterisation of the omnidirectional spectrum and spreading."""

    wind_speed_10m: float = Field(5.0, gt=0.0)
    wind_direction: float = math.radians(45.0)
    inverse_wave_age: float = Field(0.84, ge=0.84, le=5.0)
    gravity: float = Field(STANDARD_GRAVITY, gt=0.0)
    k_m: float = Field(370.0, gt=0.0)
    c_m: float = Field(0.23, gt=0.0)

    @property
    def k_p(self) -> float:
        """Spectral peak wavenumber k0·Ω² with k0 = g/U10²."""
        return self.gravity / self.wind_speed_10m ** 2 * self.inverse_wave_age ** 2

    @property
    def c_p(self) -> float:
        """Phase speed at the peak (gravity–capillary dispersion)."""
        k = self.k_p
        return math.sqrt(self.gravity / k * (1.0 + (k / self.k_m) ** 2))

    @property
    def alpha_p(self) -> float:
        return 6.0e-3 * math.sqrt(self.inverse_wave_age)

    @property
    def friction_velocity(self) -> float:
        from wakesar.simulation.spectrum import friction_velocity
        return friction_velocity(self)

    @property
    def alpha_m(self) -> float:
        from wakesar.simulation.spectrum import short_wave_coefficient
        return short_wave_coefficient(self)


class GridSpec(ParamsModel):
    """Regular facet grid; axis 0 is azimuth (x), axis 1 is ground range (y)."""

    nx: int = Field(128, ge=8)
    ny: int = Field(128, ge=8)
    dx: float = Field(2.0, gt=0.0)
    dy: float = Field(2.0, gt=0.0)
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def extent(self) -> tuple[float, float]:
        return (self.nx * self.dx, self.ny * self.dy)

    @property
    def center(self) -> tuple[float, float]:
        x0, y0 = self.origin
        return (x0 + 0.5 * (self.nx - 1) * self.dx, y0 + 0.5 * (self.ny - 1) * self.dy)

    @property
    def nyquist(self) -> float:
        """Largest wavenumber both axes resolve."""
        return math.pi / max(self.dx, self.dy)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x0, y0 = self.origin
        return x0 + self.dx * np.arange(self.nx), y0 + self.dy * np.arange(self.ny)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")


class ShipParams(ParamsModel):
    """Thin-ship hull and motion; the ship travels along its heading."""

    length: float = Field(52.0, gt=0.0)
    beam: float = Field(5.7, gt=0.0)
    draft: float = Field(3.5, gt=0.0)
    froude: float = Field(0.5, gt=0.0, lt=1.5)
    heading: float = 0.0
    # Scene coordinates of the hull midpoint; None places the ship automatically.
    position: tuple[float, float] | None = None
    gravity: float = Field(STANDARD_GRAVITY, gt=0.0)

    @property
    def speed(self) -> float:
        return self.froude * math.sqrt(self.gravity * self.length)

    @property
    def k0(self) -> float:
        """Transverse-wave wavenumber g/U_s²."""
        return self.gravity / self.speed ** 2


class SarGeometry(ParamsModel):
    """Side-looking platform flying along +x and looking towards +y."""

    altitude: float = Field(4500.0, gt=0.0)
    platform_velocity: float = Field(190.0, gt=0.0)
    carrier_frequency: float = Field(9.65e9, gt=0.0)
    incidence_angle: float = Field(math.radians(35.0), gt=0.0, lt=math.pi / 2)
    polarization: Literal["VV", "HH"] = "VV"
    azimuth_resolution: float = Field(2.0, gt=0.0)
    range_resolution: float = Field(2.0, gt=0.0)

    @property
    def radar_wavenumber(self) -> float:
        return 2.0 * math.pi * self.carrier_frequency / SPEED_OF_LIGHT

    @property
    def slant_range(self) -> float:
        return self.altitude / math.cos(self.incidence_angle)

    @property
    def range_over_velocity(self) -> float:
        """R/V, the velocity-bunching displacement per unit radial velocity."""
        return self.slant_range / self.platform_velocity

    def line_of_sight(self) -> tuple[float, float, float]:
        """Unit vector from the surface towards the radar."""
        return (0.0, -math.sin(self.incidence_angle), math.cos(self.incidence_angle))


class RenderOptions(ParamsModel):
    """Two-scale NRCS and imaging switches."""

    # k_sep = k_e / separation_divisor
    separation_divisor: float = Field(10.0, gt=0.0)
    relaxation_rate: float = Field(0.5, gt=0.0)
    permittivity_real: float = 49.0
    permittivity_imag: float = -35.5
    tilt_mode: Literal["geometric", "mtf"] = "geometric"
    hydrodynamic: bool = True
    velocity_bunching: bool = True

    @property
    def permittivity(self) -> complex:
        return complex(self.permittivity_real, self.permittivity_imag)


class WakeQuadrature(ParamsModel):
    """Panel rule for the oscillatory wake integral."""

    nodes_per_panel: int = Field(8, ge=2, le=64)
    panels_per_period: float = Field(2.0, gt=0.0)
    envelope_floor: float = Field(1e-8, gt=0.0, lt=1.0)
    max_refinements: int = Field(4, ge=0)
    rtol: float = Field(1e-6, gt=0.0)
    # Gaussian band limit on the wave number; None derives it from the grid.
    cutoff_wavenumber: float | None = Field(None, gt=0.0)
    depth_nodes: int = Field(16, ge=4)
    chunk_size: int = Field(256, ge=1)


# ── Noise and restoration ────────────────────────────────────────────────────

class SpeckleParams(ParamsModel):
    """L-look log-normal speckle with unit mean."""

    looks: int = Field(5, ge=1)
    seed: int = 0

    @property
    def sigma2(self) -> float:
        from scipy.special import polygamma
        return float(polygamma(1, self.looks))

    @property
    def mu(self) -> float:
        return -0.5 * self.sigma2


class ProxParams(ParamsModel):
    """Regulariser parameters; None selects the data-driven default."""

    gamma: float | None = Field(None, gt=0.0)
    gamma_scale: float = Field(1.0, gt=0.0)
    omega: float = Field(1.0, gt=0.0)
    lam: float | None = Field(None, ge=0.0, alias="lambda")
    lambda_scale: float = Field(1.0, ge=0.0)
    max_iter: int = Field(300, ge=1)
    tol: float = Field(1e-6, gt=0.0)
    inner_iter: int = Field(200, ge=1)


class RegulariserSpec(ParamsModel):
    kind: Literal["cauchy", "l1", "tv"] = "cauchy"
    params: ProxParams = ProxParams()

    @model_validator(mode="after")
    def _kind_specific(self) -> "RegulariserSpec":
        if self.kind == "cauchy" and self.params.lam is not None:
            raise ValueError("lambda is an L1/TV weight; use gamma for the Cauchy regulariser")
        if self.kind != "cauchy" and self.params.gamma is not None:
            raise ValueError("gamma applies to the Cauchy regulariser only")
        return self


class ScoreReport(ParamsModel):
    psnr_db: float
    smse_db: float
    reference_id: str = ""
    estimate_id: str = ""
    capped: bool = False


# ── Experiment configuration ────────────────────────────────────────────────

class SceneConfig(ParamsModel):
    spectrum: SpectrumParams = SpectrumParams()
    ship: ShipParams | None = ShipParams()
    grid: GridSpec = GridSpec()
    wavenumber_bins: int = Field(64, ge=16)
    direction_bins: int = Field(32, ge=16)
    time: float = 0.0
    seed: int = 0


class NoiseConfig(ParamsModel):
    looks: list[int] = Field(default_factory=lambda: [3, 5, 7], min_length=1)
    seed: int = 1


class DespeckleConfig(ParamsModel):
    regularisers: list[RegulariserSpec] = Field(
        default_factory=lambda: [
            RegulariserSpec(kind="l1"),
            RegulariserSpec(kind="tv"),
            RegulariserSpec(kind="cauchy"),
        ],
        min_length=1,
    )
    levels: int = Field(3, ge=1)
    wavelet: str = "db4"
    boundary_mode: str = "periodization"
    # Per-method scale search against the speckle-free reference.
    tune: bool = True
    tuning_grid: list[float] = Field(
        default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0, 8.0], min_length=1
    )


class OutputConfig(ParamsModel):
    directory: Path | None = None
    report_formats: list[Literal["text", "csv", "json"]] = Field(
        default_factory=lambda: ["text", "csv", "json"]
    )
    png: bool = True


class ExperimentConfig(ParamsModel):
    """A complete, reproducible experiment."""

    name: str = "experiment"
    preset: str | None = None
    scale: Literal["desk", "paper"] = "desk"
    scene: SceneConfig = SceneConfig()
    radar: SarGeometry = SarGeometry()
    render: RenderOptions = RenderOptions()
    wake_quadrature: WakeQuadrature = WakeQuadrature()
    noise: NoiseConfig = NoiseConfig()
    despeckle: DespeckleConfig = DespeckleConfig()
    output: OutputConfig = OutputConfig()


# ── Gridded values ───────────────────────────────────────────────────────────

def frozen_array(values: Any, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class IntensityImage:
    """Non-negative intensity raster with pixel spacing and provenance."""

    pixels: np.ndarray
    dx: float = 2.0
    dy: float = 2.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        pixels = frozen_array(self.pixels)
        if pixels.ndim != 2:
            raise ConfigurationError(f"IntensityImage needs a 2-D grid, got shape {pixels.shape}")
        if not np.all(np.isfinite(pixels)):
            raise ConfigurationError("IntensityImage pixels must be finite")
        if np.any(pixels < 0.0):
            raise ConfigurationError("IntensityImage pixels must be non-negative")
        if self.dx <= 0 or self.dy <= 0:
            raise ConfigurationError("pixel spacing must be positive")
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def with_pixels(self, pixels: np.ndarray, **metadata: Any) -> "IntensityImage":
        merged = {**self.metadata, **metadata}
        return IntensityImage(pixels=pixels, dx=self.dx, dy=self.dy, metadata=merged)
