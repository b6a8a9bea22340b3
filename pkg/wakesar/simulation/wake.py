"""
Wake Engine

Responsibilities:
- Michell thin-ship velocity potential of a parabolic hull
- Kelvin wake elevation Z = (U_s/g) ∂φ/∂x on a facet grid or at points
- Superposition of the wake on a wind-sea realization

Ship frame: x points backwards from the hull midpoint (the wake lies at
x > 0), y is lateral, z is up. The hull half-breadth is

    f(ξ, ζ) = (B/2) (1 − (2ξ/L)²) (1 − (ζ/D)²),  |ξ| ≤ L/2,  −D ≤ ζ ≤ 0.

The free-wave potential is written in the Fourier form

    φ(x, y, z) = −(16 B L / π) U_s Fr⁶ ∫₀^∞ C(τ, x, z) cos(yτ) dτ

with τ = k0 tanθ secθ the lateral wavenumber of the wave component heading
at θ, κ = k0 sec²θ its wavenumber, a = k0 secθ its longitudinal wavenumber
and k0 = g/U_s². The kernel is

    C(τ, x, z) = −Im[X(a; x) e^{iax}] · G(τ)
    G(τ)       = sec²θ e^{κz} I(κ) T(κ) (dθ/dτ) / (L⁴ Fr⁸)
    I(κ)       = ∫_{−D}^{0} (1 − ζ²/D²) e^{κζ} dζ              (Gauss–Legendre)
    X(a; x)    = ∫_{−L/2}^{min(x, L/2)} ξ e^{−iaξ} dξ            (closed form)
    dθ/dτ      = cos³θ / (k0 (1 + sin²θ))

Sources only radiate downstream, hence the upper limit min(x, L/2); the field
vanishes ahead of the bow. T(κ) = exp(−(κ/κ_c)²) band-limits the field to
the facet scale. ∂C/∂x = −a Re[X e^{iax}] G, so Z needs no numerical
differentiation.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from wakesar.errors import ConfigurationError, QuadratureError
from wakesar.models import GridSpec, ShipParams, WakeQuadrature, frozen_array
from wakesar.simulation.sea_surface import SeaSurfaceRealization

logger = logging.getLogger(__name__)

# max over θ of |da/dτ| = sinθ cosθ / (1 + sin²θ)
_MAX_LONGITUDINAL_RATE = 1.0 / (2.0 * math.sqrt(2.0))
# Default band limit for point evaluation: half the Nyquist of 2 m facets.
DEFAULT_POINT_CUTOFF = math.pi / 4.0


# ── Kernel ───────────────────────────────────────────────────────────────────

class MichellKernel:
    """τ-dependent factors of the wake integrand for one hull."""

    def __init__(self, ship: ShipParams, z: float, cutoff: float, depth_nodes: int = 16):
        if z > 0.0:
            raise ConfigurationError(f"evaluation depth z must be <= 0, got {z}")
        self.ship = ship
        self.z = float(z)
        self.cutoff = float(cutoff)
        self.k0 = ship.k0
        self.half_length = 0.5 * ship.length
        self._nodes, self._weights = np.polynomial.legendre.leggauss(depth_nodes)
        self.scale = 1.0 / (ship.length ** 4 * ship.froude ** 8)

    def angles(self, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """sinθ and cos²θ for τ >= 0, from t = τ/k0 = s / (1 − s²)."""
        t = tau / self.k0
        s = 2.0 * t / (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        cos2 = np.where(t > 0.0, s / np.where(t > 0.0, t, 1.0), 1.0)
        return s, cos2

    def depth_factor(self, kappa: np.ndarray) -> np.ndarray:
        """I(κ) by Gauss–Legendre on ζ ∈ [−D, 0]."""
        draft = self.ship.draft
        zeta = 0.5 * draft * (self._nodes - 1.0)
        shape = 1.0 - (zeta / draft) ** 2
        return 0.5 * draft * np.exp(np.outer(kappa, zeta)) @ (self._weights * shape)

    def common(self, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """G(τ), a(τ) and κ(τ)."""
        s, cos2 = self.angles(tau)
        kappa = self.k0 / cos2
        a = self.k0 / np.sqrt(cos2)
        dtheta_dtau = cos2 ** 1.5 / (self.k0 * (1.0 + s * s))
        taper = np.exp(-((kappa / self.cutoff) ** 2))
        g = (1.0 / cos2) * np.exp(kappa * self.z) * self.depth_factor(kappa) * taper * dtheta_dtau
        return g * self.scale, a, kappa

    def length_factor(self, a: np.ndarray, x: np.ndarray) -> np.ndarray:
        """X(a; x) e^{iax} for points x (m,) and nodes a (n,), shape (m, n)."""
        h = self.half_length
        x_col = np.asarray(x, dtype=np.float64)[:, None]
        x_end = np.clip(x_col, -h, h)
        inv_a = 1.0 / a[None, :]
        upper = np.exp(1j * a * (x_col - x_end)) * (1j * x_end * inv_a + inv_a ** 2)
        lower = np.exp(1j * a * (x_col + h)) * (-1j * h * inv_a + inv_a ** 2)
        return upper - lower

    def envelope(self, tau: np.ndarray) -> np.ndarray:
        """Upper bound of |∂C/∂x| used to place the quadrature limit."""
        g, a, _ = self.common(tau)
        length = self.ship.length
        bound = np.minimum(length ** 2 / 4.0, length / a + 2.0 / a ** 2)
        return np.abs(g) * bound * np.maximum(a, 1.0)

    def tau_max(self, floor: float) -> float:
        """Smallest τ beyond which the envelope stays below floor × peak."""
        tau = self.k0 * np.geomspace(1e-6, 1e6, 4000)
        env = self.envelope(tau)
        above = np.nonzero(env >= floor * env.max())[0]
        return float(tau[min(above[-1] + 1, tau.size - 1)])


# ── Quadrature ───────────────────────────────────────────────────────────────

def _panel_rule(tau_max: float, width: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    panels = max(1, int(math.ceil(tau_max / width)))
    edges = np.linspace(0.0, tau_max, panels + 1)
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    tau = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return tau, weights


def _integrate(kernel: MichellKernel, x: np.ndarray, y: np.ndarray, tau: np.ndarray,
               weights: np.ndarray, derivative: bool, chunk: int) -> np.ndarray:
    g, a, _ = kernel.common(tau)
    if derivative:
        factor = -(g * a) * weights
    else:
        factor = -g * weights
    out = np.empty(x.size)
    for start in range(0, x.size, chunk):
        part = slice(start, start + chunk)
        q = kernel.length_factor(a, x[part])
        body = q.real if derivative else q.imag
        out[part] = (body * factor[None, :] * np.cos(np.outer(y[part], tau))).sum(axis=1)
    return out


def _kernel_integral(ship: ShipParams, x: np.ndarray, y: np.ndarray, z: float,
                     quad: WakeQuadrature, cutoff: float, derivative: bool) -> np.ndarray:
    """∫₀^∞ C cos(yτ) dτ (or ∫ ∂C/∂x cos(yτ) dτ) at each point.

    Points are bucketed by the panel width their phase rate requires, so
    mirror points (x, ±y) always share one rule and stay exactly symmetric.
    """
    kernel = MichellKernel(ship, z, cutoff, quad.depth_nodes)
    tau_max = kernel.tau_max(quad.envelope_floor)
    base_width = 0.5 * kernel.k0
    rate = np.abs(y) + _MAX_LONGITUDINAL_RATE * (np.abs(x) + ship.length)
    needed = 2.0 * math.pi / (np.maximum(rate, 1e-12) * quad.panels_per_period)
    level = np.maximum(0, np.ceil(np.log2(base_width / np.minimum(needed, base_width)))).astype(int)

    result = np.empty(x.size)
    for bucket in np.unique(level):
        members = np.nonzero(level == bucket)[0]
        xs, ys = x[members], y[members]
        width = base_width / 2.0 ** bucket
        for refinement in range(quad.max_refinements + 1):
            tau, w = _panel_rule(tau_max, width, quad.nodes_per_panel)
            fine = _integrate(kernel, xs, ys, tau, w, derivative, quad.chunk_size)
            # Error estimate from a lower-order rule on the same panels.
            tau_c, w_c = _panel_rule(tau_max, width, max(2, quad.nodes_per_panel - 2))
            coarse = _integrate(kernel, xs, ys, tau_c, w_c, derivative, quad.chunk_size)
            scale = max(float(np.max(np.abs(fine))), 1e-300)
            error = np.abs(fine - coarse) / scale
            if np.all(error <= quad.rtol):
                break
            if refinement == quad.max_refinements:
                worst = int(np.argmax(error))
                raise QuadratureError(xs[worst], ys[worst], z, f"relative error {error[worst]:.2e}")
            width *= 0.5
        result[members] = fine
    return result


def _prefactor(ship: ShipParams) -> float:
    return -(16.0 * ship.beam * ship.length / math.pi) * ship.speed * ship.froude ** 6


def velocity_potential(x, y, z: float, ship: ShipParams,
                       quad: WakeQuadrature | None = None):
    """φ(x, y, z) in the ship frame (m²/s)."""
    quad = quad or WakeQuadrature()
    cutoff = quad.cutoff_wavenumber or DEFAULT_POINT_CUTOFF
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    ys = np.broadcast_to(np.asarray(y, dtype=np.float64), np.shape(x)).ravel()
    phi = _prefactor(ship) * _kernel_integral(ship, xs, ys, z, quad, cutoff, derivative=False)
    return float(phi[0]) if np.ndim(x) == 0 else phi.reshape(np.shape(x))


def potential_integrand(tau, x: float, y: float, z: float, ship: ShipParams,
                        cutoff: float = DEFAULT_POINT_CUTOFF):
    """C(τ, x, z) cos(yτ); the integrand of velocity_potential."""
    kernel = MichellKernel(ship, z, cutoff)
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    g, a, _ = kernel.common(tau_arr)
    c = -kernel.length_factor(a, np.array([x]))[0].imag * g
    values = c * np.cos(y * tau_arr)
    return float(values[0]) if np.ndim(tau) == 0 else values


def elevation_at(x, y, ship: ShipParams, quad: WakeQuadrature | None = None,
                 method: str = "analytic", step: float = 0.5):
    """Z = (U_s/g) ∂φ/∂x at ship-frame points (z = 0).

    method="difference" uses centred differences of φ with the given step.
    """
    quad = quad or WakeQuadrature()
    cutoff = quad.cutoff_wavenumber or DEFAULT_POINT_CUTOFF
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    ys = np.broadcast_to(np.asarray(y, dtype=np.float64), np.shape(x)).ravel()
    gain = ship.speed / ship.gravity * _prefactor(ship)
    if method == "analytic":
        z = gain * _kernel_integral(ship, xs, ys, 0.0, quad, cutoff, derivative=True)
    elif method == "difference":
        ahead = _kernel_integral(ship, xs + step, ys, 0.0, quad, cutoff, derivative=False)
        behind = _kernel_integral(ship, xs - step, ys, 0.0, quad, cutoff, derivative=False)
        z = gain * (ahead - behind) / (2.0 * step)
    else:
        raise ConfigurationError(f"unknown differentiation method '{method}'")
    return float(z[0]) if np.ndim(x) == 0 else z.reshape(np.shape(x))


# ── Gridded wake ─────────────────────────────────────────────────────────────

def ship_position(grid: GridSpec, ship: ShipParams) -> tuple[float, float]:
    """Hull midpoint in scene coordinates; by default a quarter scene ahead of centre."""
    if ship.position is not None:
        return ship.position
    cx, cy = grid.center
    lx, ly = grid.extent
    return (
        cx + 0.25 * lx * math.cos(ship.heading),
        cy + 0.25 * ly * math.sin(ship.heading),
    )


def ship_frame(grid: GridSpec, ship: ShipParams) -> tuple[np.ndarray, np.ndarray]:
    """(behind, lateral) ship-frame coordinates of every facet centre."""
    X, Y = grid.coordinates()
    xs, ys = ship_position(grid, ship)
    dx, dy = X - xs, Y - ys
    cos_h, sin_h = math.cos(ship.heading), math.sin(ship.heading)
    behind = -(dx * cos_h + dy * sin_h)
    lateral = -dx * sin_h + dy * cos_h
    return behind, lateral


def kelvin_mask(grid: GridSpec, ship: ShipParams, half_angle: float = math.radians(25.0)) -> np.ndarray:
    """Facets inside the wedge of given half-angle with its apex at the bow."""
    behind, lateral = ship_frame(grid, ship)
    from_bow = behind + 0.5 * ship.length
    return (from_bow > 0.0) & (np.abs(lateral) <= math.tan(half_angle) * from_bow)


@dataclass(frozen=True)
class WakeField:
    """Kelvin wake elevation and slopes on a facet grid."""

    grid: GridSpec
    ship: ShipParams
    elevation: np.ndarray
    slope_x: np.ndarray
    slope_y: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("elevation", "slope_x", "slope_y"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))

    @classmethod
    def from_elevation(cls, grid: GridSpec, ship: ShipParams, elevation: np.ndarray,
                       **metadata) -> "WakeField":
        slope_x, slope_y = np.gradient(np.asarray(elevation, dtype=np.float64), grid.dx, grid.dy)
        return cls(grid=grid, ship=ship, elevation=elevation, slope_x=slope_x,
                   slope_y=slope_y, metadata=metadata)


def wake_elevation(grid: GridSpec, ship: ShipParams,
                   quad: WakeQuadrature | None = None, method: str = "analytic") -> WakeField:
    """Kelvin wake on the facet grid; the heading rotates the ship frame rigidly."""
    quad = quad or WakeQuadrature()
    if quad.cutoff_wavenumber is None:
        quad = quad.model_copy(update={"cutoff_wavenumber": 0.5 * grid.nyquist})
    behind, lateral = ship_frame(grid, ship)
    elevation = elevation_at(behind, lateral, ship, quad, method=method, step=0.25 * grid.dx)
    if not np.all(np.isfinite(elevation)):
        raise QuadratureError(float("nan"), float("nan"), 0.0, "non-finite wake elevation")
    logger.info(
        "Kelvin wake on %dx%d grid: U_s=%.2f m/s, heading=%.1f deg, max|Z|=%.4f m",
        grid.nx, grid.ny, ship.speed, math.degrees(ship.heading), float(np.max(np.abs(elevation))),
    )
    return WakeField.from_elevation(
        grid, ship, elevation,
        position=list(ship_position(grid, ship)),
        cutoff_wavenumber=quad.cutoff_wavenumber,
        method=method,
    )


def composite_surface(sea: SeaSurfaceRealization, wake: WakeField) -> SeaSurfaceRealization:
    """Pointwise sum of sea and wake; the wake adds no orbital velocity."""
    if wake.grid != sea.grid or wake.elevation.shape != sea.elevation.shape:
        raise ConfigurationError(
            f"wake grid {wake.grid.shape} dx={wake.grid.dx} dy={wake.grid.dy} origin={wake.grid.origin} "
            f"does not match sea grid {sea.grid.shape} dx={sea.grid.dx} dy={sea.grid.dy} origin={sea.grid.origin}"
        )
    return SeaSurfaceRealization(
        grid=sea.grid,
        elevation=sea.elevation + wake.elevation,
        slope_x=sea.slope_x + wake.slope_x,
        slope_y=sea.slope_y + wake.slope_y,
        orbital_velocity_radial=sea.orbital_velocity_radial,
        time=sea.time,
        seed=sea.seed,
        components=sea.components,
        metadata={**sea.metadata, "wake": dict(wake.metadata)},
    )
