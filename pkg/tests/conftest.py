"""
Shared fixtures for the wakesar test-suite.

Long-running acceptance checks are marked `slow` and only run with
`pytest --runslow`.
"""
import os
import sys

import numpy as np
import pytest

# Make sure wakesar is importable
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance test (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ── Small scenes ──────────────────────────────────────────────────────────────
# 64 x 64 facets of 4 m: a 256 m scene with a quick wake evaluation.
SMALL_SCENE = {
    "name": "small",
    "scene": {
        "grid": {"nx": 64, "ny": 64, "dx": 4.0, "dy": 4.0},
        "wavenumber_bins": 32,
        "direction_bins": 16,
        "seed": 3,
    },
    "radar": {"azimuth_resolution": 4.0, "range_resolution": 4.0},
    "noise": {"looks": [3, 5], "seed": 11},
    "despeckle": {
        "levels": 2,
        "tune": False,
        "regularisers": [
            {"kind": "l1", "params": {"max_iter": 40}},
            {"kind": "tv", "params": {"inner_iter": 40}},
            {"kind": "cauchy", "params": {"max_iter": 40}},
        ],
    },
    "output": {"png": False},
}


@pytest.fixture
def small_scene() -> dict:
    import copy
    return copy.deepcopy(SMALL_SCENE)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def textured_image():
    """Smooth positive 64 x 64 intensity image with an edge and a bright blob."""
    from wakesar.models import IntensityImage

    x, y = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
    pixels = 1.0 + 0.5 * np.sin(2 * np.pi * x / 32.0) * np.cos(2 * np.pi * y / 16.0)
    pixels = pixels + np.where(y > 40, 1.5, 0.0)
    pixels = pixels + 3.0 * np.exp(-((x - 20) ** 2 + (y - 20) ** 2) / 30.0)
    return IntensityImage(pixels=pixels, dx=2.0, dy=2.0, metadata={"id": "textured"})
