"""
SarImaging Engine

Responsibilities:
- Two-scale NRCS per facet: Bragg scattering from the roughness spectrum,
  tilted by the facet slopes and modulated by the long waves
- Facet-to-pixel aggregation (area-weighted block mean)
- Velocity bunching: azimuth re-deposition of facet intensity by (R/V)·u_r

Geometry: the platform flies along +x (azimuth) and looks towards +y (ground
range) from the −y side. Arrays are indexed [azimuth, range].
"""
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from wakesar.errors import ConfigurationError, DimensionMismatchError
from wakesar.models import IntensityImage, RenderOptions, SarGeometry, SpectrumParams
from wakesar.simulation.sea_surface import SeaSurfaceRealization, harmonic_sum
from wakesar.simulation.spectrum import directional_spectrum

logger = logging.getLogger(__name__)

# Local incidence below this is treated as normal incidence (k_B -> 0).
_MIN_INCIDENCE = 1e-6
# Hydrodynamic MTF magnitude coefficient
HYDRODYNAMIC_GAIN = 4.5


def bragg_coefficient(mu, polarization: str, permittivity: complex):
    """|T|², first-order small-perturbation scattering coefficient."""
    mu_arr = np.asarray(mu, dtype=np.float64)
    sin2 = np.sin(mu_arr) ** 2
    cos_mu = np.cos(mu_arr)
    root = np.sqrt(permittivity - sin2 + 0j)
    eps = permittivity
    if polarization == "VV":
        t = (eps - 1.0) * (eps * (1.0 + sin2) - sin2) / (eps * cos_mu + root) ** 2
    elif polarization == "HH":
        t = (eps - 1.0) / (cos_mu + root) ** 2
    else:
        raise ConfigurationError(f"unsupported polarization '{polarization}'")
    value = np.abs(t) ** 2
    return float(value) if mu_arr.ndim == 0 else value


def tilt_gain(geom: SarGeometry) -> float:
    """Coefficient c of the tilt MTF i·c·k_y (applied to a field: c·∂η/∂y)."""
    theta = geom.incidence_angle
    if geom.polarization == "VV":
        return 4.0 / math.tan(theta) / (1.0 + math.sin(theta) ** 2)
    return 8.0 / math.sin(2.0 * theta)


def tilt_mtf(k, direction, geom: SarGeometry):
    """Tilt MTF of a wave component with wavenumber k heading `direction`."""
    ky = np.asarray(k) * np.sin(direction)
    return 1j * tilt_gain(geom) * ky


def hydrodynamic_mtf(k, direction, omega, relaxation_rate: float):
    """4.5 ω (k_y²/k) (ω − iμ)/(ω² + μ²), μ the relaxation rate."""
    k_arr = np.asarray(k, dtype=np.float64)
    omega_arr = np.asarray(omega, dtype=np.float64)
    ky = k_arr * np.sin(direction)
    mu = relaxation_rate
    return (
        HYDRODYNAMIC_GAIN * omega_arr * (ky ** 2 / k_arr)
        * (omega_arr - 1j * mu) / (omega_arr ** 2 + mu ** 2)
    )


@dataclass(frozen=True)
class NrcsResult:
    sigma: np.ndarray
    shadowed: int
    clamped: int

    @property
    def shadowed_fraction(self) -> float:
        return self.shadowed / max(self.sigma.size, 1)

    @property
    def clamped_fraction(self) -> float:
        return self.clamped / max(self.sigma.size, 1)


@dataclass(frozen=True)
class RenderDiagnostics:
    """Per-render counters, stored under metadata["diagnostics"]."""

    shadowed_facets: int = 0
    clamped_facets: int = 0
    facets: int = 0
    vb_dropped_fraction: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def local_incidence(slope_x, slope_y, geom: SarGeometry) -> tuple[np.ndarray, np.ndarray]:
    """cos μ_i and the facet unit normal components (nx, ny, nz)."""
    sx = np.asarray(slope_x, dtype=np.float64)
    sy = np.asarray(slope_y, dtype=np.float64)
    norm = np.sqrt(1.0 + sx ** 2 + sy ** 2)
    normal = (-sx / norm, -sy / norm, 1.0 / norm)
    lx, ly, lz = geom.line_of_sight()
    cos_mu = normal[0] * lx + normal[1] * ly + normal[2] * lz
    return cos_mu, np.stack(normal)


def nrcs(slope_x, slope_y, geom: SarGeometry, params: SpectrumParams,
         modulation=0.0, options: RenderOptions | None = None) -> NrcsResult:
    """σ̄ = 8π k_e⁴ cos⁴μ_i W(k_B) |T(μ_i)|² [1 + modulation] per facet.

    k_B = 2 k_e (−l + (l·n) n) is the projection of the incident wavevector on
    the facet plane (|k_B| = 2 k_e sin μ_i); its horizontal components select
    W = Ψ(k_Bx, k_By). Facets facing away from the radar are shadowed (σ̄ = 0);
    a negative bracket is clamped at zero.
    """
    options = options or RenderOptions()
    k_e = geom.radar_wavenumber
    cos_mu, normal = local_incidence(slope_x, slope_y, geom)
    shadowed = cos_mu <= 0.0
    mu = np.arccos(np.clip(cos_mu, -1.0, 1.0))
    mu = np.where(shadowed, 0.5 * math.pi, np.maximum(mu, _MIN_INCIDENCE))

    los = np.asarray(geom.line_of_sight())[:, None]
    flat_normal = normal.reshape(3, -1)
    l_dot_n = np.sum(los * flat_normal, axis=0)
    bragg = 2.0 * k_e * (-los + l_dot_n[None, :] * flat_normal)
    kbx = bragg[0].reshape(cos_mu.shape)
    kby = bragg[1].reshape(cos_mu.shape)
    k_b = 2.0 * k_e * np.sin(mu)
    horizontal = np.hypot(kbx, kby)
    safe = horizontal > 0.0
    kbx = np.where(safe, kbx / np.where(safe, horizontal, 1.0) * k_b, 0.0)
    kby = np.where(safe, kby / np.where(safe, horizontal, 1.0) * k_b, k_b)

    roughness = directional_spectrum(kbx, kby, params)
    coefficient = bragg_coefficient(mu, geom.polarization, options.permittivity)
    bracket = 1.0 + np.asarray(modulation, dtype=np.float64)
    negative = bracket < 0.0
    bracket = np.where(negative, 0.0, bracket)

    sigma = 8.0 * math.pi * k_e ** 4 * np.cos(mu) ** 4 * roughness * coefficient * bracket
    sigma = np.where(shadowed, 0.0, sigma)
    clamped = int(np.count_nonzero(negative & ~shadowed))
    return NrcsResult(sigma=np.asarray(sigma, dtype=np.float64),
                      shadowed=int(np.count_nonzero(shadowed)), clamped=clamped)


def modulation_field(surface: SeaSurfaceRealization, geom: SarGeometry,
                     options: RenderOptions) -> np.ndarray:
    """Re Σ M(k) A e^{iφ} over long-wave components (k < k_e / divisor).

    With tilt_mode="mtf" the tilt term is applied to the composite range
    slope (so the wake tilts the Bragg waves too) and the facets stay flat.
    """
    grid = surface.grid
    field = np.zeros(grid.shape)
    components = surface.components
    if options.hydrodynamic and components is not None:
        k_sep = geom.radar_wavenumber / options.separation_divisor
        keep = components.wavenumber < k_sep
        k = components.wavenumber[keep]
        direction = components.direction[keep]
        m = hydrodynamic_mtf(k, direction, components.angular_frequency[keep], options.relaxation_rate)
        c = components.complex_amplitudes(surface.time)[keep]
        (field,) = harmonic_sum(grid, components.kx[keep], components.ky[keep], [m * c])
    if options.tilt_mode == "mtf":
        field = field + tilt_gain(geom) * surface.slope_y
    return field


def aggregation_factor(facet: float, resolution: float, axis: str) -> int:
    if facet > resolution * (1.0 + 1e-9):
        raise ConfigurationError(f"{axis} facet size {facet} m exceeds the image resolution {resolution} m")
    factor = resolution / facet
    rounded = int(round(factor))
    if abs(factor - rounded) > 1e-6:
        raise ConfigurationError(f"{axis} resolution {resolution} m is not a whole number of {facet} m facets")
    return rounded


def aggregate(values: np.ndarray, factor_x: int, factor_y: int) -> np.ndarray:
    """Area-weighted block mean of equal-area facets."""
    nx, ny = values.shape
    if nx % factor_x or ny % factor_y:
        raise ConfigurationError(f"grid {values.shape} does not tile into {factor_x}x{factor_y} pixels")
    if factor_x == 1 and factor_y == 1:
        return np.array(values, dtype=np.float64)
    blocks = values.reshape(nx // factor_x, factor_x, ny // factor_y, factor_y)
    return blocks.mean(axis=(1, 3))


def velocity_bunching(image: IntensityImage, u_r: np.ndarray, geom: SarGeometry) -> IntensityImage:
    """Re-deposit every pixel at azimuth x + (R/V) u_r by linear splatting.

    Accumulation is a single ordered bincount, so the result is reproducible.
    Intensity displaced beyond the scene is dropped and reported.
    """
    velocity = np.asarray(u_r, dtype=np.float64)
    if velocity.shape != image.shape:
        raise DimensionMismatchError(f"velocity grid {velocity.shape} does not match image {image.shape}")
    nx, ny = image.shape
    intensity = image.pixels
    shift = geom.range_over_velocity * velocity / image.dx

    target = np.arange(nx, dtype=np.float64)[:, None] + shift
    lower = np.floor(target)
    frac = target - lower
    lower = lower.astype(np.int64)
    columns = np.broadcast_to(np.arange(ny), (nx, ny))

    out = np.zeros(nx * ny)
    dropped = 0.0
    for offset, weight in ((0, 1.0 - frac), (1, frac)):
        rows = lower + offset
        mass = intensity * weight
        inside = (rows >= 0) & (rows < nx)
        out += np.bincount((rows[inside] * ny + columns[inside]), weights=mass[inside], minlength=nx * ny)
        dropped += float(mass[~inside].sum())

    total = float(intensity.sum())
    dropped_fraction = dropped / total if total > 0.0 else 0.0
    if dropped > 0.0:
        logger.warning("velocity bunching dropped %.3e of the intensity at the scene edges", dropped_fraction)
    return image.with_pixels(
        np.maximum(out.reshape(nx, ny), 0.0),
        vb_dropped_intensity=dropped,
        vb_dropped_fraction=dropped_fraction,
        vb_max_shift_pixels=float(np.max(np.abs(shift))) if shift.size else 0.0,
    )


def render(surface: SeaSurfaceRealization, geom: SarGeometry, params: SpectrumParams,
           options: RenderOptions | None = None) -> IntensityImage:
    """Speckle-free intensity image of a (composite) surface."""
    options = options or RenderOptions()
    grid = surface.grid
    fx = aggregation_factor(grid.dx, geom.azimuth_resolution, "azimuth")
    fy = aggregation_factor(grid.dy, geom.range_resolution, "range")

    modulation = modulation_field(surface, geom, options)
    if options.tilt_mode == "geometric":
        result = nrcs(surface.slope_x, surface.slope_y, geom, params, modulation, options)
    else:
        zeros = np.zeros(grid.shape)
        result = nrcs(zeros, zeros, geom, params, modulation, options)

    if result.shadowed:
        logger.warning("%d shadowed facets assigned zero NRCS", result.shadowed)
    if result.clamped:
        logger.warning("%d facets with negative modulation bracket clamped at zero", result.clamped)

    pixels = aggregate(result.sigma, fx, fy)
    velocity = aggregate(surface.orbital_velocity_radial, fx, fy)
    image = IntensityImage(
        pixels=pixels,
        dx=grid.dx * fx,
        dy=grid.dy * fy,
        metadata={
            "seed": surface.seed,
            "time": surface.time,
            "spectrum": params.model_dump(),
            "geometry": geom.model_dump(),
            "render": options.model_dump(),
            "wake": surface.metadata.get("wake"),
        },
    )
    if options.velocity_bunching:
        image = velocity_bunching(image, velocity, geom)
    diagnostics = RenderDiagnostics(
        shadowed_facets=result.shadowed,
        clamped_facets=result.clamped,
        facets=result.sigma.size,
        vb_dropped_fraction=image.metadata.get("vb_dropped_fraction", 0.0),
    )
    image = image.with_pixels(image.pixels, diagnostics=diagnostics.as_dict())
    logger.info("Rendered %dx%d image, mean NRCS=%.4e", *image.shape, float(image.pixels.mean()))
    return image
