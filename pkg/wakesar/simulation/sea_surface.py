"""
SeaSurface Engine

Responsibilities:
- Sample the directional spectrum on logarithmic k-bins and uniform θ-bins
- Draw seeded random phases (counter-based Philox stream)
- Evaluate the harmonic double sum for elevation, analytic slopes and the
  line-of-sight orbital velocity on a facet grid

The double sum ΣΣ A_ij cos(k_i·x − ω_i t + r_ij) is evaluated as a separable
complex product Re[(e^{i kx x} · c) (e^{i ky y})ᵀ], which is the direct
summation reorganised; it is exact up to floating-point round-off.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from wakesar.errors import ConfigurationError
from wakesar.models import GridSpec, SarGeometry, SpectrumParams, frozen_array
from wakesar.simulation.spectrum import _wavenumber, omnidirectional_spectrum, spreading

logger = logging.getLogger(__name__)

MIN_BINS = 16
# Components per matrix product; bounds the (n, chunk) complex work arrays.
COMPONENT_CHUNK = 512


def dispersion(k, params: SpectrumParams):
    """ω = sqrt(g k (1 + (k/k_m)²)), deep-water gravity–capillary waves."""
    k_arr = _wavenumber(k)
    omega = np.sqrt(params.gravity * k_arr * (1.0 + (k_arr / params.k_m) ** 2))
    return float(omega) if np.ndim(k) == 0 else omega


@dataclass(frozen=True)
class SpectralComponents:
    """Harmonic components of one realization, indexed [k-bin, θ-bin]."""

    k: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    dk: np.ndarray
    dtheta: float
    seed: int

    @property
    def kx(self) -> np.ndarray:
        return (self.k[:, None] * np.cos(self.theta)[None, :]).ravel()

    @property
    def ky(self) -> np.ndarray:
        return (self.k[:, None] * np.sin(self.theta)[None, :]).ravel()

    @property
    def wavenumber(self) -> np.ndarray:
        return np.repeat(self.k, self.theta.size)

    @property
    def angular_frequency(self) -> np.ndarray:
        return np.repeat(self.omega, self.theta.size)

    @property
    def direction(self) -> np.ndarray:
        return np.tile(self.theta, self.k.size)

    def complex_amplitudes(self, t: float) -> np.ndarray:
        """A e^{i(r − ωt)} flattened to match kx/ky."""
        return (self.amplitude * np.exp(1j * (self.phase - self.omega[:, None] * t))).ravel()

    @property
    def variance(self) -> float:
        """Expected elevation variance Σ A²/2 = Σ S D dk dθ."""
        return float(0.5 * np.sum(self.amplitude ** 2))


@dataclass(frozen=True)
class SeaSurfaceRealization:
    """Elevation, slopes and radial orbital velocity on a facet grid at time t."""

    grid: GridSpec
    elevation: np.ndarray
    slope_x: np.ndarray
    slope_y: np.ndarray
    orbital_velocity_radial: np.ndarray
    time: float = 0.0
    seed: int = 0
    components: SpectralComponents | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("elevation", "slope_x", "slope_y", "orbital_velocity_radial"):
            values = frozen_array(getattr(self, name))
            if values.shape != self.grid.shape:
                raise ConfigurationError(
                    f"{name} has shape {values.shape}, grid expects {self.grid.shape}"
                )
            if not np.all(np.isfinite(values)):
                raise ConfigurationError(f"{name} contains non-finite values")
            object.__setattr__(self, name, values)


def wavenumber_band(grid: GridSpec) -> tuple[float, float]:
    """Default sampling band [2π / scene extent, Nyquist]."""
    return 2.0 * math.pi / max(grid.extent), grid.nyquist


def build_components(
    params: SpectrumParams,
    grid: GridSpec,
    wavenumber_bins: int = 64,
    direction_bins: int = 32,
    seed: int = 0,
    k_range: tuple[float, float] | None = None,
) -> SpectralComponents:
    """Sample A_ij = sqrt(2 S(k_i) D(k_i, θ_j) dk_i dθ_j) and the phases r_ij."""
    if wavenumber_bins < MIN_BINS or direction_bins < MIN_BINS:
        raise ConfigurationError(
            f"need at least {MIN_BINS} wavenumber and direction bins, "
            f"got {wavenumber_bins} and {direction_bins}"
        )

    k_lo, k_hi = k_range if k_range is not None else wavenumber_band(grid)
    if k_hi > grid.nyquist:
        logger.warning(
            "wavenumbers above the grid Nyquist %.4f rad/m truncated (requested %.4f)",
            grid.nyquist, k_hi,
        )
        k_hi = grid.nyquist
    if not 0.0 < k_lo < k_hi:
        raise ConfigurationError(f"empty wavenumber band [{k_lo}, {k_hi}]")

    edges = np.geomspace(k_lo, k_hi, wavenumber_bins + 1)
    k = np.sqrt(edges[:-1] * edges[1:])
    dk = np.diff(edges)
    dtheta = 2.0 * math.pi / direction_bins
    theta = dtheta * np.arange(direction_bins)

    density = (
        omnidirectional_spectrum(k, params)[:, None]
        * spreading(k[:, None], theta[None, :] - params.wind_direction, params)
    )
    amplitude = np.sqrt(2.0 * density * dk[:, None] * dtheta)

    rng = np.random.Generator(np.random.Philox(seed))
    phase = rng.uniform(0.0, 2.0 * math.pi, size=amplitude.shape)

    return SpectralComponents(
        k=frozen_array(k),
        theta=frozen_array(theta),
        omega=frozen_array(dispersion(k, params)),
        amplitude=frozen_array(amplitude),
        phase=frozen_array(phase),
        dk=frozen_array(dk),
        dtheta=dtheta,
        seed=seed,
    )


def harmonic_sum(
    grid: GridSpec,
    kx: np.ndarray,
    ky: np.ndarray,
    coefficients: list[np.ndarray],
) -> list[np.ndarray]:
    """Re Σ_c w_c e^{i(kx_c x + ky_c y)} on the grid, one output per weight vector."""
    x, y = grid.axes()
    outputs = [np.zeros(grid.shape) for _ in coefficients]
    for start in range(0, kx.size, COMPONENT_CHUNK):
        part = slice(start, start + COMPONENT_CHUNK)
        ex = np.exp(1j * np.outer(x, kx[part]))
        ey = np.exp(1j * np.outer(y, ky[part]))
        for out, weights in zip(outputs, coefficients):
            out += ((ex * weights[part]) @ ey.T).real
    return outputs


def evaluate(
    components: SpectralComponents,
    grid: GridSpec,
    t: float = 0.0,
    geometry: SarGeometry | None = None,
) -> SeaSurfaceRealization:
    """Elevation, slopes and radial orbital velocity of the components at time t.

    Radial velocity is the linear-theory surface particle velocity projected on
    the unit vector towards the radar (0, −sin θ_inc, cos θ_inc): horizontal
    speed Aω cos φ along the propagation direction, vertical Aω sin φ.
    """
    geometry = geometry or SarGeometry()
    kx, ky = components.kx, components.ky
    c = components.complex_amplitudes(t)
    omega = components.angular_frequency
    theta = components.direction
    sin_inc = math.sin(geometry.incidence_angle)
    cos_inc = math.cos(geometry.incidence_angle)

    elevation, slope_x, slope_y, velocity = harmonic_sum(
        grid,
        kx,
        ky,
        [
            c,
            1j * kx * c,
            1j * ky * c,
            c * omega * (-sin_inc * np.sin(theta) - 1j * cos_inc),
        ],
    )
    return SeaSurfaceRealization(
        grid=grid,
        elevation=elevation,
        slope_x=slope_x,
        slope_y=slope_y,
        orbital_velocity_radial=velocity,
        time=t,
        seed=components.seed,
        components=components,
        metadata={"wavenumber_bins": components.k.size, "direction_bins": components.theta.size},
    )


def synthesize(
    params: SpectrumParams,
    grid: GridSpec,
    wavenumber_bins: int = 64,
    direction_bins: int = 32,
    t: float = 0.0,
    seed: int = 0,
    geometry: SarGeometry | None = None,
    k_range: tuple[float, float] | None = None,
) -> SeaSurfaceRealization:
    """Random sea-surface realization on `grid` (see module docstring)."""
    components = build_components(params, grid, wavenumber_bins, direction_bins, seed, k_range)
    surface = evaluate(components, grid, t, geometry)
    logger.info(
        "Synthesized %dx%d sea surface: %d components, seed=%d, std=%.4f m",
        grid.nx, grid.ny, components.amplitude.size, seed, float(np.std(surface.elevation)),
    )
    return surface


def silence(components: SpectralComponents) -> SpectralComponents:
    """Same sampling with all amplitudes set to zero (zero-wind limit)."""
    return replace(components, amplitude=frozen_array(np.zeros_like(components.amplitude)))
