"""
Spectrum Engine

Responsibilities:
- Omnidirectional wind-sea spectrum S(k) = k⁻³ (B_l + B_h) (Elfouhaily parameterisation)
- Long-wave and short-wave curvature spectra
- Angular spreading D(k, θ) with the tanh spreading ratio
- Friction velocity by fixed-point iteration of the logarithmic drag law

All functions are vectorised over k (and θ) and return a float for scalar
input. Directions passed to `spreading` are measured from the wind direction.
"""
import logging
import math

import numpy as np
from scipy import integrate

from wakesar.errors import DomainError, NumericalError
from wakesar.models import SpectrumParams

logger = logging.getLogger(__name__)

# ── Constants table ──────────────────────────────────────────────────────────
ELFOUHAILY_CONSTANTS = {
    # von Kármán constant of the logarithmic wind profile
    "von_karman": 0.4,
    # Kinematic viscosity of air (m²/s), smooth-flow roughness term
    "air_viscosity": 1.5e-5,
    # Wave-age roughness length z0 = 3.7e-5 (U10²/g) Ω^0.9
    "roughness_coefficient": 3.7e-5,
    "roughness_exponent": 0.9,
    # Phillips–Kitaigorodskii equilibrium coefficient α_p = 6e-3 √Ω
    "alpha_p_coefficient": 6.0e-3,
    # α_m = 1e-2 (1 + ln(u*/c_m)) for u* <= c_m, 1e-2 (1 + 3 ln(u*/c_m)) above
    "alpha_m_coefficient": 1.0e-2,
    # JONSWAP peak enhancement γ = 1.7 (Ω <= 1), 1.7 + 6 log10 Ω (1 < Ω <= 5)
    "jonswap_gamma_base": 1.7,
    "jonswap_gamma_slope": 6.0,
    # JONSWAP width σ = 0.08 (1 + 4 Ω⁻³)
    "jonswap_sigma_base": 0.08,
    # Spreading ratio Δ(k) = tanh(a0 + a_p (c/c_p)^2.5 + a_m (c_m/c)^2.5)
    "spreading_a0": math.log(2.0) / 4.0,
    "spreading_ap": 4.0,
    "spreading_am_coefficient": 0.13,
}

_DRAG_TOLERANCE = 1e-6
_DRAG_MAX_ITER = 100


def _wavenumber(k) -> np.ndarray:
    k_arr = np.asarray(k, dtype=np.float64)
    if not np.all(np.isfinite(k_arr)) or np.any(k_arr <= 0.0):
        raise DomainError("wavenumber k must be finite and strictly positive")
    return k_arr


def _result(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


def phase_speed(k, params: SpectrumParams):
    """c(k) = sqrt(g/k · (1 + (k/k_m)²))."""
    k_arr = _wavenumber(k)
    c = np.sqrt(params.gravity / k_arr * (1.0 + (k_arr / params.k_m) ** 2))
    return _result(c, k)


def friction_velocity(params: SpectrumParams) -> float:
    """Solve U10 = (u*/κ) ln(10/z0(u*)) for u* by fixed-point iteration."""
    const = ELFOUHAILY_CONSTANTS
    u10, g, omega = params.wind_speed_10m, params.gravity, params.inverse_wave_age
    kappa = const["von_karman"]
    rough = const["roughness_coefficient"] * u10 ** 2 / g * omega ** const["roughness_exponent"]

    u_star = kappa * u10 / math.log(10.0 / rough)
    for _ in range(_DRAG_MAX_ITER):
        z0 = rough + 0.11 * const["air_viscosity"] / u_star
        updated = kappa * u10 / math.log(10.0 / z0)
        if abs(updated - u_star) < _DRAG_TOLERANCE:
            return updated
        u_star = updated
    raise NumericalError(f"friction velocity did not converge for U10={u10}")


def short_wave_coefficient(params: SpectrumParams) -> float:
    """α_m from the friction velocity; clipped at zero for very light winds."""
    ratio = friction_velocity(params) / params.c_m
    slope = 1.0 if ratio <= 1.0 else 3.0
    alpha_m = ELFOUHAILY_CONSTANTS["alpha_m_coefficient"] * (1.0 + slope * math.log(ratio))
    return max(alpha_m, 0.0)


def jonswap_gamma(inverse_wave_age: float) -> float:
    const = ELFOUHAILY_CONSTANTS
    if inverse_wave_age <= 1.0:
        return const["jonswap_gamma_base"]
    return const["jonswap_gamma_base"] + const["jonswap_gamma_slope"] * math.log10(inverse_wave_age)


def jonswap_sigma(inverse_wave_age: float) -> float:
    return ELFOUHAILY_CONSTANTS["jonswap_sigma_base"] * (1.0 + 4.0 * inverse_wave_age ** -3)


def _peak_factors(k_arr: np.ndarray, params: SpectrumParams) -> tuple[np.ndarray, np.ndarray]:
    """L_PM and J_p, shared by both curvature parts."""
    k_p = params.k_p
    omega = params.inverse_wave_age
    l_pm = np.exp(-1.25 * (k_p / k_arr) ** 2)
    sigma = jonswap_sigma(omega)
    big_gamma = np.exp(-((np.sqrt(k_arr / k_p) - 1.0) ** 2) / (2.0 * sigma ** 2))
    j_p = jonswap_gamma(omega) ** big_gamma
    return l_pm, j_p


def long_wave_curvature(k, params: SpectrumParams):
    """B_l, the gravity (long-wave) part of the curvature spectrum."""
    k_arr = _wavenumber(k)
    c = phase_speed(k_arr, params)
    l_pm, j_p = _peak_factors(k_arr, params)
    cutoff = np.exp(-params.inverse_wave_age / math.sqrt(10.0) * (np.sqrt(k_arr / params.k_p) - 1.0))
    b_l = 0.5 * params.alpha_p * (params.c_p / c) * l_pm * j_p * cutoff
    return _result(b_l, k)


def short_wave_curvature(k, params: SpectrumParams):
    """B_h, the capillary (short-wave) part; carries L_PM·J_p as well."""
    k_arr = _wavenumber(k)
    c = phase_speed(k_arr, params)
    l_pm, j_p = _peak_factors(k_arr, params)
    capillary = np.exp(-0.25 * (k_arr / params.k_m - 1.0) ** 2)
    b_h = 0.5 * params.alpha_m * (params.c_m / c) * l_pm * j_p * capillary
    return _result(b_h, k)


def omnidirectional_spectrum(k, params: SpectrumParams):
    """S(k) in m³."""
    k_arr = _wavenumber(k)
    s = (long_wave_curvature(k_arr, params) + short_wave_curvature(k_arr, params)) / k_arr ** 3
    return _result(s, k)


def spreading_ratio(k, params: SpectrumParams):
    """Δ(k), the upwind/crosswind ratio of the spreading function."""
    const = ELFOUHAILY_CONSTANTS
    k_arr = _wavenumber(k)
    c = phase_speed(k_arr, params)
    a_m = const["spreading_am_coefficient"] * params.friction_velocity / params.c_m
    delta = np.tanh(
        const["spreading_a0"]
        + const["spreading_ap"] * (c / params.c_p) ** 2.5
        + a_m * (params.c_m / c) ** 2.5
    )
    if np.any(np.abs(delta) > 1.0):
        raise NumericalError("spreading ratio left [-1, 1]")
    return _result(delta, k)


def spreading(k, theta, params: SpectrumParams):
    """D(k, θ) = (1/2π)[1 + Δ(k) cos 2θ], θ measured from the wind direction."""
    delta = spreading_ratio(k, params)
    d = (1.0 + np.asarray(delta) * np.cos(2.0 * np.asarray(theta, dtype=np.float64))) / (2.0 * math.pi)
    return float(d) if np.ndim(k) == 0 and np.ndim(theta) == 0 else d


def directional_spectrum(kx, ky, params: SpectrumParams):
    """Cartesian elevation spectrum Ψ(kx, ky) = S(k) D(k, φ − φ_wind) / k.

    D is π-periodic, so Ψ(k) = Ψ(−k) and the folded roughness spectrum
    ½[Ψ(k) + Ψ(−k)] equals Ψ itself.
    """
    kx_arr = np.asarray(kx, dtype=np.float64)
    ky_arr = np.asarray(ky, dtype=np.float64)
    k = np.hypot(kx_arr, ky_arr)
    direction = np.arctan2(ky_arr, kx_arr) - params.wind_direction
    psi = omnidirectional_spectrum(k, params) * spreading(k, direction, params) / k
    return float(psi) if kx_arr.ndim == 0 and ky_arr.ndim == 0 else psi


def band_variance(params: SpectrumParams, k_min: float, k_max: float) -> float:
    """∫ S(k) dk over [k_min, k_max], integrated in log k."""
    if not 0.0 < k_min < k_max:
        raise DomainError("band_variance needs 0 < k_min < k_max")

    def integrand(log_k: float) -> float:
        k = math.exp(log_k)
        return omnidirectional_spectrum(k, params) * k

    breakpoints = [math.log(b) for b in (params.k_p, 2 * params.k_p, params.k_m) if k_min < b < k_max]
    value, _ = integrate.quad(
        integrand, math.log(k_min), math.log(k_max), points=breakpoints or None, limit=500
    )
    return float(value)


def significant_wave_height(params: SpectrumParams, k_min: float = 1e-3, k_max: float = 1e4) -> float:
    """H_s = 4 sqrt(∫ S dk)."""
    h_s = 4.0 * math.sqrt(band_variance(params, k_min, k_max))
    logger.debug("H_s=%.4f m for U10=%.2f m/s", h_s, params.wind_speed_10m)
    return h_s
