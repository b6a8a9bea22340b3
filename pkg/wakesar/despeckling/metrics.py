"""
Metrics Engine

Responsibilities:
- PSNR with the peak taken as max(reference)
- S/MSE = 10 log10(Σ ref² / Σ (ref − est)²)
- ScoreReport assembly for the results table

Both scores are computed on linear intensities. Identical images score the
PSNR_CAP_DB sentinel.
"""
import math

import numpy as np

from wakesar.errors import DimensionMismatchError, DomainError
from wakesar.models import IntensityImage, ScoreReport

PSNR_CAP_DB = 999.0


def _pixels(image) -> np.ndarray:
    if isinstance(image, IntensityImage):
        return image.pixels
    return np.asarray(image, dtype=np.float64)


def _pair(ref, est) -> tuple[np.ndarray, np.ndarray]:
    a, b = _pixels(ref), _pixels(est)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"reference {a.shape} and estimate {b.shape} differ in shape")
    return a, b


def mse(ref, est) -> float:
    a, b = _pair(ref, est)
    return float(np.mean((a - b) ** 2))


def psnr(ref, est) -> float:
    """10 log10(max(ref)² / MSE) in dB."""
    a, b = _pair(ref, est)
    error = float(np.mean((a - b) ** 2))
    if error == 0.0:
        return PSNR_CAP_DB
    peak = float(np.max(a))
    if peak <= 0.0:
        raise DomainError("PSNR needs a reference with a positive peak")
    return 10.0 * math.log10(peak ** 2 / error)


def smse(ref, est) -> float:
    """10 log10(Σ ref² / Σ (ref − est)²) in dB."""
    a, b = _pair(ref, est)
    error = float(np.sum((a - b) ** 2))
    if error == 0.0:
        return PSNR_CAP_DB
    signal = float(np.sum(a ** 2))
    if signal <= 0.0:
        raise DomainError("S/MSE needs a reference with non-zero energy")
    return 10.0 * math.log10(signal / error)


def score(ref, est, reference_id: str = "", estimate_id: str = "") -> ScoreReport:
    p = psnr(ref, est)
    return ScoreReport(
        psnr_db=p,
        smse_db=smse(ref, est),
        reference_id=reference_id,
        estimate_id=estimate_id,
        capped=p == PSNR_CAP_DB,
    )
