"""
Raster I/O

Responsibilities:
- Float raster: one ASCII header line
      WAKESAR-RASTER-1 <width> <height> <dx> <dy>\\n
  followed by width·height little-endian float32 values, row-major, where a
  row is one azimuth line (height = nx, width = ny)
- JSON metadata sidecar next to every raster (sorted keys, no timestamps)
- 8-bit min–max stretched PNG preview (Pillow)
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from wakesar import __version__
from wakesar.errors import RasterFormatError
from wakesar.models import IntensityImage

logger = logging.getLogger(__name__)

MAGIC = "WAKESAR-RASTER-1"
RASTER_SUFFIX = ".wsr"
_DTYPE = np.dtype("<f4")
_MAX_HEADER = 256


def _jsonable(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_jsonable) + "\n"


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of a resolved configuration."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def library_versions() -> dict[str, str]:
    import pywt
    import scipy

    return {"wakesar": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "pywavelets": pywt.__version__}


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def write_raster(path: Path, image: IntensityImage) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx, ny = image.shape
    header = f"{MAGIC} {ny} {nx} {image.dx!r} {image.dy!r}\n".encode("ascii")
    with path.open("wb") as handle:
        handle.write(header)
        handle.write(np.ascontiguousarray(image.pixels, dtype=_DTYPE).tobytes())
    return path


def read_raster(path: Path, with_sidecar: bool = True) -> IntensityImage:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"raster not found: {path}")
    data = path.read_bytes()
    end = data.find(b"\n", 0, _MAX_HEADER)
    if end < 0:
        raise RasterFormatError(f"{path}: missing raster header")
    fields = data[:end].decode("ascii", errors="replace").split()
    if len(fields) != 5 or fields[0] != MAGIC:
        raise RasterFormatError(f"{path}: not a {MAGIC} raster")
    try:
        width, height = int(fields[1]), int(fields[2])
        dx, dy = float(fields[3]), float(fields[4])
    except ValueError as exc:
        raise RasterFormatError(f"{path}: malformed header '{data[:end]!r}'") from exc
    payload = data[end + 1:]
    expected = width * height * _DTYPE.itemsize
    if width <= 0 or height <= 0 or len(payload) != expected:
        raise RasterFormatError(f"{path}: payload has {len(payload)} bytes, header implies {expected}")
    pixels = np.frombuffer(payload, dtype=_DTYPE).reshape(height, width).astype(np.float64)

    metadata = {}
    sidecar = sidecar_path(path)
    if with_sidecar and sidecar.exists():
        metadata = json.loads(sidecar.read_text(encoding="utf-8")).get("image", {})
    return IntensityImage(pixels=pixels, dx=dx, dy=dy, metadata=metadata)


def write_png(path: Path, image: IntensityImage) -> Path:
    """Min–max stretched 8-bit grayscale; a constant image maps to black."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = image.pixels
    low, high = float(pixels.min()), float(pixels.max())
    if high > low:
        scaled = np.round(255.0 * (pixels - low) / (high - low))
    else:
        scaled = np.zeros_like(pixels)
    Image.fromarray(scaled.astype(np.uint8)).save(path, format="PNG")
    return path


def save_image(image: IntensityImage, directory: Path, stem: str, png: bool = True,
               provenance: dict | None = None) -> dict[str, str]:
    """Raster + sidecar (+ PNG); returns the written paths by kind."""
    directory = Path(directory)
    raster = write_raster(directory / f"{stem}{RASTER_SUFFIX}", image)
    sidecar = sidecar_path(raster)
    sidecar.write_text(
        canonical_json({
            "image": image.metadata,
            "shape": list(image.shape),
            "dx": image.dx,
            "dy": image.dy,
            "provenance": {**(provenance or {}), "versions": library_versions()},
        }),
        encoding="utf-8",
    )
    paths = {"raster": raster.as_posix(), "sidecar": sidecar.as_posix()}
    if png:
        paths["png"] = write_png(directory / f"{stem}.png", image).as_posix()
    logger.debug("Wrote %s", raster)
    return paths
