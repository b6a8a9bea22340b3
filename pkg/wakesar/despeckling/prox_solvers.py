"""
ProxSolvers Engine

Responsibilities:
- Proximal maps: Cauchy (cubic root selection), L1 (soft threshold),
  isotropic TV (dual projected gradient)
- Forward–backward iteration per coefficient plane with iteration reports
- Despeckling pipeline: log -> DWT -> FB per detail plane -> inverse DWT -> exp
- Data-driven parameter defaults and PSNR grid-search tuning

The Cauchy prox solves

    u³ − x u² + (γ² + 2ω) u − x γ² = 0

the stationarity condition of log(γ² + u²) − log γ + (u − x)²/(2ω). With one
real root it is the minimiser; with three, the root with the smallest
objective is returned.
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from wakesar.errors import ConfigurationError
from wakesar.models import IntensityImage, ProxParams, RegulariserSpec
from wakesar.despeckling import wavelet

logger = logging.getLogger(__name__)

# MAD-to-σ factor for Gaussian noise
MAD_SCALE = 0.6745
# Consecutive objective increases that flag divergence
DIVERGENCE_WINDOW = 10
# Lipschitz constant of the data-fidelity gradient; bounds the Cauchy FB step
FIDELITY_LIPSCHITZ = 1.0
NEWTON_STEPS = 2
# Dual step of the TV solver (1 / ‖∇‖² on the unit grid)
TV_STEP = 0.125
_TINY = np.finfo(np.float64).tiny


# ── Cauchy ───────────────────────────────────────────────────────────────────

def _positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0.0 or not math.isfinite(value):
        raise ConfigurationError(f"{name} must be a positive finite number, got {value}")
    return value


def cauchy_objective(u, x, gamma: float, omega: float):
    """log(γ² + u²) − log γ + (u − x)²/(2ω)."""
    u = np.asarray(u, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return np.log(gamma ** 2 + u ** 2) - math.log(gamma) + (u - x) ** 2 / (2.0 * omega)


def cubic_residual(u, x, gamma: float, omega: float):
    """u³ − x u² + (γ² + 2ω) u − x γ²; zero at every stationary point."""
    u = np.asarray(u, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return ((u - x) * u + gamma ** 2 + 2.0 * omega) * u - x * gamma ** 2


def _cardano(x: np.ndarray, gamma: float, omega: float) -> np.ndarray:
    c = gamma ** 2 + 2.0 * omega
    p = c - x ** 2 / 3.0
    q = -2.0 * x ** 3 / 27.0 + x * c / 3.0 - x * gamma ** 2
    delta = p ** 3 / 27.0 + q ** 2 / 4.0
    shift = x / 3.0

    one_root = delta >= 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        # Cancellation-free form of cbrt(−q/2 + √Δ) + cbrt(−q/2 − √Δ).
        sign = np.where(q >= 0.0, 1.0, -1.0)
        a = -sign * np.cbrt(np.abs(q) / 2.0 + np.sqrt(np.where(one_root, delta, 0.0)))
        b = np.where(a != 0.0, -p / (3.0 * np.where(a != 0.0, a, 1.0)), 0.0)
        single = a + b + shift

        # Three real roots (Δ < 0 implies p < 0).
        neg_p = np.where(one_root, 1.0, -p)
        m = 2.0 * np.sqrt(neg_p / 3.0)
        arg = np.clip(1.5 * q / np.where(one_root, -1.0, p) * np.sqrt(3.0 / neg_p), -1.0, 1.0)
        phi = np.arccos(arg) / 3.0
        roots = np.stack([m * np.cos(phi - 2.0 * math.pi * k / 3.0) + shift for k in range(3)])
    values = cauchy_objective(roots, x[None, ...], gamma, omega)
    best = np.take_along_axis(roots, np.argmin(values, axis=0)[None, ...], axis=0)[0]
    return np.where(one_root, single, best)


def _polish(u: np.ndarray, x: np.ndarray, gamma: float, omega: float) -> np.ndarray:
    c = gamma ** 2 + 2.0 * omega
    for _ in range(NEWTON_STEPS):
        f = cubic_residual(u, x, gamma, omega)
        slope = (3.0 * u - 2.0 * x) * u + c
        with np.errstate(invalid="ignore", divide="ignore"):
            candidate = u - f / slope
        better = np.isfinite(candidate) & (
            np.abs(cubic_residual(candidate, x, gamma, omega)) <= np.abs(f)
        )
        u = np.where(better, candidate, u)
    return u


def prox_cauchy(x, gamma: float, omega: float):
    """argmin_u log(γ² + u²) − log γ + (u − x)²/(2ω), elementwise."""
    gamma = _positive("gamma", gamma)
    omega = _positive("omega", omega)
    x_arr = np.asarray(x, dtype=np.float64)
    u = _polish(_cardano(x_arr, gamma, omega), x_arr, gamma, omega)
    return float(u) if x_arr.ndim == 0 else u


# ── L1 ───────────────────────────────────────────────────────────────────────

def prox_l1(x, threshold: float):
    """Soft thresholding sign(x)·max(|x| − t, 0)."""
    if threshold < 0.0:
        raise ConfigurationError(f"L1 threshold must be non-negative, got {threshold}")
    x_arr = np.asarray(x, dtype=np.float64)
    u = np.sign(x_arr) * np.maximum(np.abs(x_arr) - threshold, 0.0)
    return float(u) if x_arr.ndim == 0 else u


# ── TV ───────────────────────────────────────────────────────────────────────

def gradient(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences, zero on the last row/column."""
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:-1, :] = u[1:, :] - u[:-1, :]
    gy[:, :-1] = u[:, 1:] - u[:, :-1]
    return gx, gy


def divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Negative adjoint of `gradient`."""
    div = np.zeros_like(px)
    div[0, :] += px[0, :]
    div[1:-1, :] += px[1:-1, :] - px[:-2, :]
    div[-1, :] -= px[-2, :]
    div[:, 0] += py[:, 0]
    div[:, 1:-1] += py[:, 1:-1] - py[:, :-2]
    div[:, -1] -= py[:, -2]
    return div


def total_variation(u: np.ndarray) -> float:
    gx, gy = gradient(np.asarray(u, dtype=np.float64))
    return float(np.sum(np.hypot(gx, gy)))


@dataclass(frozen=True)
class TvProxResult:
    image: np.ndarray
    # ½‖weight·div p − g‖² per inner iteration (non-increasing)
    dual_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    final_change: float = 0.0


def tv_prox_solve(grid, weight: float, inner_iter: int = 200, tol: float = 0.0) -> TvProxResult:
    """argmin_u ½‖u − g‖² + weight·TV(u) by projected gradient on the dual.

    u = g − weight·div p with |p| ≤ 1 pixelwise. Stops early once the
    relative decrease of the dual objective falls below tol.
    """
    if inner_iter < 1:
        raise ConfigurationError(f"inner_iter must be >= 1, got {inner_iter}")
    if weight < 0.0:
        raise ConfigurationError(f"TV weight must be non-negative, got {weight}")
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise ConfigurationError(f"prox_tv needs a 2-D grid, got shape {g.shape}")
    if weight == 0.0:
        return TvProxResult(image=g.copy(), converged=True)

    px = np.zeros_like(g)
    py = np.zeros_like(g)
    trace = []
    change = 0.0
    converged = False
    for _ in range(inner_iter):
        gx, gy = gradient(divergence(px, py) - g / weight)
        px = px + TV_STEP * gx
        py = py + TV_STEP * gy
        norm = np.maximum(1.0, np.hypot(px, py))
        px /= norm
        py /= norm
        residual = weight * divergence(px, py) - g
        trace.append(0.5 * float(np.sum(residual ** 2)))
        if len(trace) > 1:
            change = (trace[-2] - trace[-1]) / max(trace[-2], _TINY)
            if change < tol:
                converged = True
                break
    return TvProxResult(image=g - weight * divergence(px, py), dual_trace=trace,
                        iterations=len(trace), converged=converged, final_change=change)


def prox_tv(grid, weight: float, inner_iter: int = 200) -> np.ndarray:
    """Isotropic TV proximal map; weight = 0 is the identity."""
    return tv_prox_solve(grid, weight, inner_iter).image


# ── Parameter defaults ───────────────────────────────────────────────────────

def noise_sigma(plane) -> float:
    """Robust σ: MAD/0.6745, falling back to RMS then 1 for degenerate planes."""
    values = np.asarray(plane, dtype=np.float64).ravel()
    if values.size == 0:
        return 1.0
    mad = float(np.median(np.abs(values - np.median(values))))
    if mad > 0.0:
        return mad / MAD_SCALE
    rms = float(np.sqrt(np.mean(values ** 2)))
    return rms if rms > 0.0 else 1.0


def estimate_gamma(plane, scale: float = 1.0) -> float:
    """Default Cauchy γ: half the MAD noise estimate of the plane."""
    return 0.5 * noise_sigma(plane) * scale


@dataclass
class IterationReport:
    """Outcome of one forward–backward solve."""

    kind: str
    level: int = 0
    orientation: int = 0
    iterations: int = 0
    final_change: float = 0.0
    converged: bool = False
    diverging: bool = False
    gamma: float | None = None
    omega: float = 1.0
    lam: float | None = None
    objective: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    # TV only: dual objective per inner iteration
    dual_trace: list[float] = field(default_factory=list)

    @property
    def final_objective(self) -> float | None:
        return self.objective[-1] if self.objective else None

    def as_dict(self, trace: bool = False) -> dict:
        data = asdict(self)
        if not trace:
            data.pop("objective")
            data.pop("dual_trace")
        data["final_objective"] = self.final_objective
        return data


@dataclass(frozen=True)
class ResolvedProx:
    kind: str
    omega: float
    gamma: float | None = None
    lam: float | None = None
    inner_iter: int = 200
    warnings: tuple[str, ...] = ()

    def prox(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "cauchy":
            return prox_cauchy(u, self.gamma, self.omega)
        if self.kind == "l1":
            return prox_l1(u, self.omega * self.lam)
        return prox_tv(u, self.omega * self.lam, self.inner_iter)

    def penalty(self, phi: np.ndarray) -> float:
        if self.kind == "cauchy":
            return float(np.sum(np.log(self.gamma ** 2 + phi ** 2) - math.log(self.gamma)))
        if self.kind == "l1":
            return self.lam * float(np.sum(np.abs(phi)))
        return self.lam * total_variation(phi)


def resolve_params(plane: np.ndarray, spec: RegulariserSpec) -> ResolvedProx:
    """Fill data-driven defaults; the Cauchy step is clamped to min(ω, 4γ², 1).

    4γ² keeps each prox subproblem convex; 1 is the inverse Lipschitz
    constant of the fidelity gradient.
    """
    params: ProxParams = spec.params
    omega = params.omega
    warnings = []
    if spec.kind == "cauchy":
        base = params.gamma if params.gamma is not None else estimate_gamma(plane)
        gamma = base * params.gamma_scale
        limit = min(4.0 * gamma ** 2, 1.0 / FIDELITY_LIPSCHITZ)
        if omega > limit:
            bound = "4*gamma^2" if 4.0 * gamma ** 2 <= 1.0 / FIDELITY_LIPSCHITZ else "1/L"
            message = f"omega {omega:.4g} clamped to {bound} = {limit:.4g}"
            logger.warning(message)
            warnings.append(message)
            omega = limit
        return ResolvedProx("cauchy", omega=omega, gamma=gamma, warnings=tuple(warnings))
    base = params.lam if params.lam is not None else noise_sigma(plane)
    return ResolvedProx(spec.kind, omega=omega, lam=base * params.lambda_scale,
                        inner_iter=params.inner_iter)


def forward_backward(plane, spec: RegulariserSpec, level: int = 0,
                     orientation: int = 0) -> tuple[np.ndarray, IterationReport]:
    """Φ ← prox(Φ − ω(Φ − Γ)) from Φ⁽⁰⁾ = Γ.

    Stops when ‖Φ⁽ᵏ⁺¹⁾ − Φ⁽ᵏ⁾‖/‖Φ⁽ᵏ⁾‖ < tol and returns Φ⁽ᵏ⁾; otherwise
    returns the iterate after max_iter steps. The objective trace records
    ½‖Γ − Φ‖² + Σh(Φ).
    """
    observed = np.asarray(plane, dtype=np.float64)
    resolved = resolve_params(observed, spec)
    params = spec.params
    report = IterationReport(
        kind=spec.kind, level=level, orientation=orientation, gamma=resolved.gamma,
        omega=resolved.omega, lam=resolved.lam, warnings=list(resolved.warnings),
    )

    def objective(phi: np.ndarray) -> float:
        return 0.5 * float(np.sum((observed - phi) ** 2)) + resolved.penalty(phi)

    phi = observed.copy()
    report.objective.append(objective(phi))
    increases = 0
    for _ in range(params.max_iter):
        u = phi - resolved.omega * (phi - observed)
        updated = resolved.prox(u)
        change = float(np.linalg.norm(updated - phi)) / max(float(np.linalg.norm(phi)), _TINY)
        report.final_change = change
        if change < params.tol:
            report.converged = True
            break
        phi = updated
        report.iterations += 1
        report.objective.append(objective(phi))
        previous = report.objective[-2]
        if report.objective[-1] > previous + 1e-12 * abs(previous):
            increases += 1
        else:
            increases = 0
        if increases >= DIVERGENCE_WINDOW and not report.diverging:
            report.diverging = True
            message = f"objective increased for {DIVERGENCE_WINDOW} consecutive iterations"
            report.warnings.append(message)
            logger.warning("FB %s level %d orientation %d: %s", spec.kind, level, orientation, message)

    logger.debug(
        "FB %s level=%d orientation=%d iterations=%d change=%.3e",
        spec.kind, level, orientation, report.iterations, report.final_change,
    )
    return phi, report


# ── Pipeline ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DespeckleResult:
    image: IntensityImage
    reports: list[IterationReport]


def _speckle_sigma2(noisy: IntensityImage, speckle_sigma2: float | None) -> float:
    if speckle_sigma2 is not None:
        return float(speckle_sigma2)
    if "speckle_sigma2" in noisy.metadata:
        return float(noisy.metadata["speckle_sigma2"])
    if "looks" in noisy.metadata:
        from scipy.special import polygamma
        return float(polygamma(1, int(noisy.metadata["looks"])))
    raise ConfigurationError("speckle log-variance unknown: pass speckle_sigma2 or a look count")


def run_despeckle(noisy: IntensityImage, spec: RegulariserSpec, speckle_sigma2: float | None = None,
                  levels: int = wavelet.DEFAULT_LEVELS, wavelet_name: str = wavelet.DEFAULT_WAVELET,
                  boundary_mode: str = wavelet.DEFAULT_BOUNDARY,
                  floor: float | None = None) -> DespeckleResult:
    """Restore a speckled intensity image; reports are kept per subband."""
    sigma2 = _speckle_sigma2(noisy, speckle_sigma2)
    log_image = wavelet.log_transform(noisy, floor)

    if spec.kind == "tv":
        params = spec.params
        lam = (params.lam if params.lam is not None else 0.5 * math.sqrt(sigma2)) * params.lambda_scale
        weight = lam * params.omega
        solved = tv_prox_solve(log_image.values, weight, params.inner_iter, tol=params.tol)
        restored = solved.image
        objective = 0.5 * float(np.sum((log_image.values - restored) ** 2)) + weight * total_variation(restored)
        reports = [IterationReport(kind="tv", iterations=solved.iterations, converged=solved.converged,
                                   final_change=solved.final_change, omega=params.omega, lam=lam,
                                   objective=[objective], dual_trace=list(solved.dual_trace))]
    else:
        pyramid = wavelet.dwt2_forward(log_image, levels, wavelet_name, boundary_mode)
        reports = []

        def solve(level: int, orientation: int, plane: np.ndarray) -> np.ndarray:
            phi, report = forward_backward(plane, spec, level, orientation)
            reports.append(report)
            return phi

        restored = wavelet.dwt2_inverse(pyramid.replace_details(solve))

    image = wavelet.exp_transform(
        restored, bias=0.5 * sigma2, dx=noisy.dx, dy=noisy.dy,
        metadata={
            **noisy.metadata,
            "despeckle": {
                "regulariser": spec.kind,
                "params": spec.params.model_dump(by_alias=True),
                "levels": levels,
                "wavelet": wavelet_name,
                "boundary_mode": boundary_mode,
                "log_floor": log_image.floor,
                "floored_pixels": log_image.floored,
                "bias": 0.5 * sigma2,
                "subbands": [report.as_dict() for report in reports],
            },
        },
    )
    logger.info(
        "Despeckled %dx%d image with %s: %d solves, %d iterations total",
        *noisy.shape, spec.kind, len(reports), sum(r.iterations for r in reports),
    )
    return DespeckleResult(image=image, reports=reports)


def despeckle(noisy: IntensityImage, spec: RegulariserSpec, speckle_sigma2: float | None = None,
              **options) -> IntensityImage:
    """log -> DWT -> FB per detail plane -> inverse DWT -> exp(· + σ²/2).

    The approximation plane passes through; TV acts once on the log image.
    """
    return run_despeckle(noisy, spec, speckle_sigma2, **options).image


# ── Tuning ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TuningResult:
    spec: RegulariserSpec
    scale: float
    psnr_db: float
    result: DespeckleResult
    scores: dict[float, float]


def scaled_spec(spec: RegulariserSpec, scale: float) -> RegulariserSpec:
    key = "gamma_scale" if spec.kind == "cauchy" else "lambda_scale"
    params = spec.params.model_copy(update={key: getattr(spec.params, key) * scale})
    return RegulariserSpec(kind=spec.kind, params=params)


def tune_regulariser(noisy: IntensityImage, reference: IntensityImage, spec: RegulariserSpec,
                     grid: list[float], speckle_sigma2: float | None = None,
                     **options) -> TuningResult:
    """Grid search over the γ/λ scale maximising PSNR against the reference.

    Ties keep the first scale in grid order.
    """
    from wakesar.despeckling.metrics import psnr

    if not grid:
        raise ConfigurationError("tuning grid must not be empty")
    best = None
    scores = {}
    for scale in grid:
        candidate = scaled_spec(spec, scale)
        result = run_despeckle(noisy, candidate, speckle_sigma2, **options)
        score = psnr(reference, result.image)
        scores[float(scale)] = score
        if best is None or score > best.psnr_db:
            best = TuningResult(spec=candidate, scale=float(scale), psnr_db=score,
                                result=result, scores=scores)
    logger.info("Tuned %s: scale=%.3g PSNR=%.3f dB", spec.kind, best.scale, best.psnr_db)
    return TuningResult(spec=best.spec, scale=best.scale, psnr_db=best.psnr_db,
                        result=best.result, scores=dict(scores))
