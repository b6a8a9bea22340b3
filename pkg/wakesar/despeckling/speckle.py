"""
Speckle Engine

Responsibilities:
- L-look log-normal multiplicative noise V = exp(N(mu, sigma²)) with
  sigma² = trigamma(L) and mu = −sigma²/2 (unit mean)
- Apply G = F·V to a speckle-free intensity image
"""
import logging
import math

import numpy as np

from wakesar.models import IntensityImage, SpeckleParams

logger = logging.getLogger(__name__)


def looks_variance(looks: int) -> float:
    """Var[V] = e^{σ²} − 1 for the unit-mean log-normal model."""
    return math.expm1(SpeckleParams(looks=looks).sigma2)


def speckle_field(shape: tuple[int, ...], params: SpeckleParams) -> np.ndarray:
    """Independent unit-mean log-normal draws, one per pixel in C order."""
    rng = np.random.Generator(np.random.Philox(params.seed))
    normal = rng.standard_normal(size=shape)
    return np.exp(params.mu + math.sqrt(params.sigma2) * normal)


def apply_speckle(image: IntensityImage, params: SpeckleParams) -> IntensityImage:
    """G = F·V, deterministic under params.seed."""
    noise = speckle_field(image.shape, params)
    noisy = image.pixels * noise
    logger.info(
        "Applied %d-look speckle (sigma2=%.4f, seed=%d) to %dx%d image",
        params.looks, params.sigma2, params.seed, *image.shape,
    )
    return image.with_pixels(
        noisy,
        looks=params.looks,
        speckle_seed=params.seed,
        speckle_sigma2=params.sigma2,
    )
