"""
Wavelet Engine

Responsibilities:
- Log/exp conversion between intensity and the additive log domain
- Multilevel separable 2-D DWT analysis and synthesis (PyWavelets)
- SubbandPyramid: immutable container of approximation + detail planes
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
import pywt

from wakesar.errors import ConfigurationError, PyramidStructureError
from wakesar.models import IntensityImage, frozen_array

logger = logging.getLogger(__name__)

DEFAULT_WAVELET = "db4"
DEFAULT_BOUNDARY = "periodization"
DEFAULT_LEVELS = 3
# Relative floor applied before the logarithm.
RELATIVE_FLOOR = 1e-10
# exp(700) is close to the float64 limit.
MAX_EXPONENT = 700.0
ORIENTATIONS = ("horizontal", "vertical", "diagonal")


@dataclass(frozen=True)
class LogImage:
    """Log-intensity grid plus the floor used and how many pixels hit it."""

    values: np.ndarray
    floor: float
    floored: int = 0
    dx: float = 2.0
    dy: float = 2.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", frozen_array(self.values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def default_floor(pixels: np.ndarray) -> float:
    peak = float(np.max(pixels)) if pixels.size else 0.0
    if peak <= 0.0:
        return float(np.finfo(np.float64).tiny)
    return RELATIVE_FLOOR * peak


def log_transform(image: IntensityImage, floor: float | None = None) -> LogImage:
    """g = ln(max(pixel, floor)); floor defaults to 1e-10 × max(pixel)."""
    floor = default_floor(image.pixels) if floor is None else float(floor)
    if not floor > 0.0:
        raise ConfigurationError(f"log floor must be positive, got {floor}")
    floored = int(np.count_nonzero(image.pixels < floor))
    if floored:
        logger.debug("%d pixels raised to the log floor %.3e", floored, floor)
    values = np.log(np.maximum(image.pixels, floor))
    return LogImage(values=values, floor=floor, floored=floored,
                    dx=image.dx, dy=image.dy, metadata=image.metadata)


def exp_transform(grid, bias: float = 0.0, dx: float | None = None, dy: float | None = None,
                  metadata: dict | None = None) -> IntensityImage:
    """pixel = exp(value + bias) with the exponent clamped at MAX_EXPONENT."""
    if isinstance(grid, LogImage):
        values = grid.values
        dx = grid.dx if dx is None else dx
        dy = grid.dy if dy is None else dy
        metadata = {**grid.metadata, **(metadata or {})}
    else:
        values = np.asarray(grid, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ConfigurationError("exp_transform needs a finite grid")
    exponent = values + bias
    clamped = int(np.count_nonzero(exponent > MAX_EXPONENT))
    if clamped:
        logger.warning("%d log values clamped at %.0f before exp", clamped, MAX_EXPONENT)
    return IntensityImage(
        pixels=np.exp(np.minimum(exponent, MAX_EXPONENT)),
        dx=2.0 if dx is None else dx,
        dy=2.0 if dy is None else dy,
        metadata=dict(metadata or {}),
    )


# ── Pyramid ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SubbandPyramid:
    """Coefficients in PyWavelets order: details[0] is the coarsest level.

    Levels are numbered from 1 (finest) to `levels` (coarsest); orientations
    1, 2, 3 are horizontal, vertical and diagonal detail.
    """

    approximation: np.ndarray
    details: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]
    wavelet_name: str = DEFAULT_WAVELET
    boundary_mode: str = DEFAULT_BOUNDARY
    shape: tuple[int, int] | None = None

    def __post_init__(self):
        approximation = frozen_array(self.approximation)
        if approximation.ndim != 2:
            raise PyramidStructureError("approximation plane must be 2-D")
        if not self.details:
            raise PyramidStructureError("pyramid needs at least one detail level")
        details = []
        for index, level in enumerate(self.details):
            if len(level) != 3:
                raise PyramidStructureError(f"detail level {index} has {len(level)} planes, expected 3")
            planes = tuple(frozen_array(plane) for plane in level)
            shapes = {plane.shape for plane in planes}
            if len(shapes) != 1 or planes[0].ndim != 2:
                raise PyramidStructureError(f"detail planes at level {index} disagree in shape: {shapes}")
            details.append(planes)
        if details[0][0].shape != approximation.shape:
            raise PyramidStructureError(
                f"approximation {approximation.shape} does not match coarsest details {details[0][0].shape}"
            )
        for coarse, fine in zip(details, details[1:]):
            if any(f < c for f, c in zip(fine[0].shape, coarse[0].shape)):
                raise PyramidStructureError("detail planes must grow from coarse to fine levels")
        object.__setattr__(self, "approximation", approximation)
        object.__setattr__(self, "details", tuple(details))
        if self.shape is not None:
            object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    @property
    def levels(self) -> int:
        return len(self.details)

    def planes(self) -> Iterator[tuple[int, int, np.ndarray]]:
        """(level, orientation, plane) for every detail plane, coarsest first."""
        for index, level in enumerate(self.details):
            for orientation, plane in enumerate(level, start=1):
                yield self.levels - index, orientation, plane

    def replace_details(self, fn: Callable[[int, int, np.ndarray], np.ndarray]) -> "SubbandPyramid":
        """New pyramid with each detail plane mapped through fn(level, orientation, plane)."""
        details = []
        for index, level in enumerate(self.details):
            number = self.levels - index
            updated = []
            for orientation, plane in enumerate(level, start=1):
                new = np.asarray(fn(number, orientation, plane), dtype=np.float64)
                if new.shape != plane.shape:
                    raise PyramidStructureError(
                        f"replacement plane {new.shape} at level {number} expected {plane.shape}"
                    )
                updated.append(new)
            details.append(tuple(updated))
        return SubbandPyramid(self.approximation, tuple(details), self.wavelet_name,
                              self.boundary_mode, self.shape)

    def to_coefficients(self) -> list:
        return [np.array(self.approximation)] + [tuple(np.array(p) for p in level) for level in self.details]

    def energy(self) -> float:
        total = float(np.sum(self.approximation ** 2))
        for _, _, plane in self.planes():
            total += float(np.sum(plane ** 2))
        return total


def _wavelet(name: str) -> pywt.Wavelet:
    if name not in pywt.wavelist(kind="discrete"):
        raise ConfigurationError(f"unknown discrete wavelet '{name}'")
    return pywt.Wavelet(name)


def max_levels(shape: tuple[int, int], wavelet_name: str = DEFAULT_WAVELET) -> int:
    return pywt.dwt_max_level(min(shape), _wavelet(wavelet_name).dec_len)


def dwt2_forward(grid, levels: int = DEFAULT_LEVELS, wavelet_name: str = DEFAULT_WAVELET,
                 boundary_mode: str = DEFAULT_BOUNDARY) -> SubbandPyramid:
    """Separable multilevel decomposition of a 2-D grid."""
    values = grid.values if isinstance(grid, LogImage) else np.asarray(grid, dtype=np.float64)
    if values.ndim != 2:
        raise ConfigurationError(f"dwt2_forward needs a 2-D grid, got shape {values.shape}")
    if boundary_mode not in pywt.Modes.modes:
        raise ConfigurationError(f"unknown boundary mode '{boundary_mode}'")
    wavelet = _wavelet(wavelet_name)
    limit = pywt.dwt_max_level(min(values.shape), wavelet.dec_len)
    if not 1 <= levels <= limit:
        raise ConfigurationError(
            f"{levels} levels requested; a {values.shape} grid supports 1..{limit} with {wavelet_name}"
        )
    coefficients = pywt.wavedec2(values, wavelet, mode=boundary_mode, level=levels)
    return SubbandPyramid(
        approximation=coefficients[0],
        details=tuple(tuple(level) for level in coefficients[1:]),
        wavelet_name=wavelet_name,
        boundary_mode=boundary_mode,
        shape=values.shape,
    )


def dwt2_inverse(pyramid: SubbandPyramid) -> np.ndarray:
    """Perfect-reconstruction synthesis, cropped to the analysed shape."""
    if not isinstance(pyramid, SubbandPyramid):
        raise PyramidStructureError(f"expected a SubbandPyramid, got {type(pyramid).__name__}")
    try:
        values = pywt.waverec2(pyramid.to_coefficients(), _wavelet(pyramid.wavelet_name),
                               mode=pyramid.boundary_mode)
    except ValueError as exc:
        raise PyramidStructureError(f"inconsistent pyramid: {exc}") from exc
    if pyramid.shape is not None:
        nx, ny = pyramid.shape
        values = values[:nx, :ny]
    return np.ascontiguousarray(values)
