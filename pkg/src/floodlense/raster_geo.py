"""Geographic and raster primitives shared by the whole pipeline.

Pixel data lives in numpy arrays that are frozen (non-writeable) at
construction time, so every type here is safe to share across threads.
Rasters are row-major, channel-interleaved: shape (height, width, channels).
On-disk interchange is 8-bit PNG only.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import (
    AlreadyNormalized,
    AntimeridianCrossing,
    BadChannel,
    InvalidInput,
    ShapeMismatch,
)


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate: latitude in [-90, 90], longitude in [-180, 180]."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise InvalidInput(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidInput(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise InvalidInput(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned lat/lon extent. Never crosses the antimeridian."""

    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self):
        for name in ("min_lon", "min_lat", "max_lon", "max_lat"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInput(f"non-finite bound {name}")
        if not (-180.0 <= self.min_lon < self.max_lon <= 180.0):
            raise InvalidInput(
                f"bad longitude bounds [{self.min_lon}, {self.max_lon}]"
            )
        if not (-90.0 <= self.min_lat < self.max_lat <= 90.0):
            raise InvalidInput(f"bad latitude bounds [{self.min_lat}, {self.max_lat}]")

    def contains(self, p: GeoPoint) -> bool:
        return (
            self.min_lon <= p.lon <= self.max_lon
            and self.min_lat <= p.lat <= self.max_lat
        )


def bbox_around(center: GeoPoint, half_extent: float) -> BoundingBox:
    """Build the square query box center +/- half_extent degrees per axis.

    Latitude bounds are clamped to the poles; a box that would leave the
    [-180, 180] longitude range raises AntimeridianCrossing (boxes spanning
    the antimeridian are rejected, not wrapped).
    """
    if half_extent <= 0:
        raise InvalidInput(f"half_extent must be positive, got {half_extent}")
    min_lon = center.lon - half_extent
    max_lon = center.lon + half_extent
    if min_lon < -180.0 or max_lon > 180.0:
        raise AntimeridianCrossing(
            f"box around lon={center.lon} with half_extent={half_extent} "
            "leaves [-180, 180]"
        )
    min_lat = max(center.lat - half_extent, -90.0)
    max_lat = min(center.lat + half_extent, 90.0)
    return BoundingBox(min_lon, min_lat, max_lon, max_lat)


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr or out.base is arr:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ImageRaster:
    """An image grid, either 8-bit [0, 255] or normalized float in [0, 1].

    ``pixels`` has shape (height, width, channels); ``normalized`` records
    which of the two sample conventions applies.
    """

    pixels: np.ndarray
    normalized: bool = False
    width: int = field(init=False)
    height: int = field(init=False)
    channels: int = field(init=False)

    def __post_init__(self):
        arr = self.pixels
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise InvalidInput(f"raster must be HxWxC, got shape {arr.shape}")
        if self.normalized:
            arr = arr.astype(np.float32, copy=False)
            if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
                raise InvalidInput("normalized samples must lie in [0, 1]")
        else:
            if arr.dtype != np.uint8:
                raise InvalidInput(
                    f"8-bit raster must be uint8, got dtype {arr.dtype}"
                )
        object.__setattr__(self, "pixels", _freeze(arr))
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])
        object.__setattr__(self, "channels", arr.shape[2])

    def channel(self, idx: int) -> np.ndarray:
        if not 0 <= idx < self.channels:
            raise BadChannel(f"channel {idx} out of range for {self.channels}")
        return self.pixels[:, :, idx]

    def as_float(self) -> np.ndarray:
        """Samples as float32 in [0, 1] regardless of storage convention."""
        if self.normalized:
            return self.pixels.astype(np.float32, copy=False)
        return self.pixels.astype(np.float32) / 255.0

    def to_uint8(self) -> "ImageRaster":
        if not self.normalized:
            return self
        quantized = np.floor(self.pixels * 255.0 + 0.5).astype(np.uint8)
        return ImageRaster(quantized, normalized=False)


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-pixel water/flood likelihood in [0, 1]."""

    values: np.ndarray
    width: int = field(init=False)
    height: int = field(init=False)

    def __post_init__(self):
        arr = self.values
        if arr.ndim != 2:
            raise InvalidInput(f"probability map must be HxW, got {arr.shape}")
        arr = arr.astype(np.float32, copy=False)
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InvalidInput("probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(arr))
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])


@dataclass(frozen=True)
class BinaryMask:
    """Boolean water mask; True marks water/flood pixels."""

    bits: np.ndarray
    width: int = field(init=False)
    height: int = field(init=False)

    def __post_init__(self):
        arr = self.bits
        if arr.ndim != 2:
            raise InvalidInput(f"mask must be HxW, got {arr.shape}")
        arr = arr.astype(bool, copy=False)
        object.__setattr__(self, "bits", _freeze(arr))
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])

    def positive_fraction(self) -> float:
        if self.bits.size == 0:
            return 0.0
        return float(np.count_nonzero(self.bits)) / self.bits.size


def nearest_resize(src: ImageRaster, target_w: int, target_h: int) -> ImageRaster:
    """Nearest-neighbor resample: output (i, j) copies source pixel
    (floor(i * src_h / target_h), floor(j * src_w / target_w))."""
    if target_w < 1 or target_h < 1:
        raise InvalidInput(f"target dims must be >= 1, got {target_w}x{target_h}")
    rows = (np.arange(target_h, dtype=np.int64) * src.height) // target_h
    cols = (np.arange(target_w, dtype=np.int64) * src.width) // target_w
    out = src.pixels[rows[:, None], cols[None, :], :]
    return ImageRaster(out, normalized=src.normalized)


def nearest_resize_mask(src: BinaryMask, target_w: int, target_h: int) -> BinaryMask:
    """Same index rule as nearest_resize, applied to a boolean mask."""
    if target_w < 1 or target_h < 1:
        raise InvalidInput(f"target dims must be >= 1, got {target_w}x{target_h}")
    rows = (np.arange(target_h, dtype=np.int64) * src.height) // target_h
    cols = (np.arange(target_w, dtype=np.int64) * src.width) // target_w
    return BinaryMask(src.bits[rows[:, None], cols[None, :]])


def normalize(src: ImageRaster) -> ImageRaster:
    """Map 8-bit samples to v / 255 and flip the normalized flag."""
    if src.normalized:
        raise AlreadyNormalized("raster is already normalized")
    return ImageRaster(src.pixels.astype(np.float32) / 255.0, normalized=True)


def to_png_bytes(img: ImageRaster) -> bytes:
    """Encode as PNG. Normalized rasters are quantized back to 8-bit first."""
    arr = img.to_uint8().pixels
    if arr.shape[2] == 1:
        pil = Image.fromarray(arr[:, :, 0], mode="L")
    elif arr.shape[2] == 3:
        pil = Image.fromarray(arr, mode="RGB")
    else:
        raise ShapeMismatch(f"cannot encode {arr.shape[2]}-channel raster as PNG")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def from_png_bytes(data: bytes) -> ImageRaster:
    try:
        pil = Image.open(io.BytesIO(data))
        pil.load()
    except Exception as exc:
        raise InvalidInput(f"not a decodable PNG: {exc}") from exc
    if pil.mode not in ("L", "RGB"):
        pil = pil.convert("RGB")
    arr = np.asarray(pil, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return ImageRaster(arr, normalized=False)


def save_png(img: ImageRaster, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_png_bytes(img))


def load_png(path) -> ImageRaster:
    with open(path, "rb") as fh:
        return from_png_bytes(fh.read())
