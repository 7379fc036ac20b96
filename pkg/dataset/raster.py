"""Raster ingestion and per-tile operations: remap, crop, augment, filter, downscale."""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

from dataset.heightmap import Heightmap
from utils.errors import RasterFormatError
from utils.logging import get_logger

logger = get_logger(__name__)

SIXTEEN_BIT_MODES = ("I;16", "I;16B", "I;16L", "I;16N", "I")


def load_raster(path: Union[str, Path]) -> Heightmap:
    """
    Load a single-channel grayscale raster.

    16-bit sources are mapped linearly onto [0, 255] (65535 -> 255).

    Args:
        path: Image file path

    Returns:
        Heightmap with value_range (0, 255)

    Raises:
        FileNotFoundError: If the file does not exist
        RasterFormatError: If the file is unreadable, multi-channel or empty
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Raster not found: {path}")

    # Whole-planet mosaics exceed Pillow's decompression-bomb guard.
    previous_limit = Image.MAX_IMAGE_PIXELS
    Image.MAX_IMAGE_PIXELS = None
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "1":
                img = img.convert("L")
                mode = "L"
            if mode == "L":
                pixels = np.array(img, dtype=np.uint8)
                bit_depth = 8
            elif mode in SIXTEEN_BIT_MODES:
                raw = np.array(img).astype(np.float64)
                if raw.min() < 0 or raw.max() > 65535:
                    raise RasterFormatError(f"{path}: values outside the 16-bit range")
                pixels = np.rint(raw * 255.0 / 65535.0).astype(np.uint8)
                bit_depth = 16
            else:
                raise RasterFormatError(
                    f"{path}: expected a single-channel grayscale image, got mode {mode!r}"
                )
    except (UnidentifiedImageError, OSError) as e:
        raise RasterFormatError(f"Unreadable raster {path}: {e}") from e
    finally:
        Image.MAX_IMAGE_PIXELS = previous_limit

    if pixels.ndim != 2 or 0 in pixels.shape:
        raise RasterFormatError(f"{path}: zero-dimension raster {pixels.shape}")

    logger.debug(f"Loaded {path.name}: {pixels.shape[1]}x{pixels.shape[0]} ({bit_depth}-bit)")
    return Heightmap(pixels, value_range=(0.0, 255.0), source_bit_depth=bit_depth)


class BrightnessCurve:
    """Monotone intensity map [0,255] -> [0,255], stored as a 256-entry lookup table."""

    def __init__(self, lut: Sequence[int], name: str = "custom"):
        table = np.asarray(lut)
        if table.shape != (256,):
            raise RasterFormatError(f"Curve lookup table must have 256 entries, got {table.shape}")
        if table.min() < 0 or table.max() > 255:
            raise RasterFormatError("Curve values must lie in [0, 255]")
        if table[0] != 0:
            raise RasterFormatError("Curve must map 0 to 0")
        if np.any(np.diff(table.astype(np.int64)) < 0):
            raise RasterFormatError("Curve must be monotonically non-decreasing")
        self.lut = np.rint(table).astype(np.uint8)
        self.name = name

    @classmethod
    def gamma(cls, gamma: float = 0.5) -> "BrightnessCurve":
        """round(255 * (v / 255) ** gamma); gamma < 1 lifts low altitudes."""
        if gamma <= 0:
            raise RasterFormatError(f"gamma must be positive, got {gamma}")
        v = np.arange(256, dtype=np.float64)
        return cls(np.rint(255.0 * (v / 255.0) ** gamma), name=f"gamma({gamma:g})")

    @classmethod
    def identity(cls) -> "BrightnessCurve":
        return cls(np.arange(256), name="identity")

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray]) -> "BrightnessCurve":
        return cls(np.rint(np.asarray(fn(np.arange(256, dtype=np.float64)))), name=getattr(fn, "__name__", "custom"))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return self.lut[np.asarray(values, dtype=np.uint8)]

    def __repr__(self) -> str:
        return f"BrightnessCurve({self.name})"


def brightness_remap(h: Heightmap, curve: Union[BrightnessCurve, Sequence[int], Callable]) -> Heightmap:
    """
    Apply a monotone brightness curve to every pixel.

    Args:
        h: Source heightmap
        curve: BrightnessCurve, 256-entry lookup table, or vectorized callable

    Returns:
        Remapped heightmap with unchanged dimensions
    """
    if not isinstance(curve, BrightnessCurve):
        curve = BrightnessCurve.from_callable(curve) if callable(curve) else BrightnessCurve(curve)
    return Heightmap(np.take(curve.lut, h.pixels), h.value_range, h.source_bit_depth)


def _axis_count(size: int, tile: int, stride: int) -> int:
    return (size - tile) // stride + 1


def tile_offsets(width: int, height: int, tile: int, stride: int) -> List[Tuple[int, int]]:
    """
    Enumerate (row, col) offsets of every full tile in row-major order.

    Raises:
        RasterFormatError: If the tile does not fit or stride < 1
    """
    if stride < 1:
        raise RasterFormatError(f"stride must be >= 1, got {stride}")
    if tile < 1 or tile > min(width, height):
        raise RasterFormatError(f"tile {tile} does not fit a {width}x{height} raster")
    rows = range(0, _axis_count(height, tile, stride) * stride, stride)
    cols = range(0, _axis_count(width, tile, stride) * stride, stride)
    return [(r, c) for r in rows for c in cols]


def count_tiles(width: int, height: int, tile: int, stride: int) -> int:
    """Closed-form sliding-window tile count."""
    if stride < 1:
        raise RasterFormatError(f"stride must be >= 1, got {stride}")
    if tile < 1 or tile > min(width, height):
        raise RasterFormatError(f"tile {tile} does not fit a {width}x{height} raster")
    return _axis_count(width, tile, stride) * _axis_count(height, tile, stride)


def iter_tiles(h: Heightmap, tile: int, stride: int) -> Iterator[Tuple[int, int, Heightmap]]:
    """Yield (row, col, tile view) for every sliding-window position."""
    for row, col in tile_offsets(h.width, h.height, tile, stride):
        yield row, col, Heightmap(h.pixels[row:row + tile, col:col + tile], h.value_range, h.source_bit_depth)


def crop_sliding(h: Heightmap, tile: int, stride: int) -> List[Heightmap]:
    """
    Crop every full tile x tile window at multiples of stride.

    Tiles are views into ``h``; nothing is copied.
    """
    return [t for _, _, t in iter_tiles(h, tile, stride)]


@dataclass(frozen=True)
class AugmentSpec:
    """Rotation about the image centre followed by optional flips."""
    rotation_degrees: float = 0.0
    hflip: bool = False
    vflip: bool = False
    fill_value: int = 255

    def __post_init__(self):
        if not 0.0 <= float(self.rotation_degrees) <= 180.0:
            raise RasterFormatError(f"rotation_degrees must be within [0, 180], got {self.rotation_degrees}")
        if not 0 <= int(self.fill_value) <= 255:
            raise RasterFormatError(f"fill_value must be an intensity, got {self.fill_value}")

    @property
    def is_identity(self) -> bool:
        return self.rotation_degrees == 0 and not self.hflip and not self.vflip

    def to_dict(self) -> dict:
        return {
            "rotation_degrees": float(self.rotation_degrees),
            "hflip": bool(self.hflip),
            "vflip": bool(self.vflip),
            "fill_value": int(self.fill_value),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentSpec":
        return cls(**data)


def augment(h: Heightmap, spec: AugmentSpec) -> Heightmap:
    """
    Rotate (nearest neighbour, no expansion) then flip.

    Uncovered pixels take ``spec.fill_value`` so the sentinel filter stays exact.
    """
    pixels = h.pixels
    if spec.rotation_degrees != 0:
        img = Image.fromarray(np.ascontiguousarray(pixels))
        rotated = img.rotate(
            float(spec.rotation_degrees),
            resample=Image.Resampling.NEAREST,
            expand=False,
            fillcolor=int(spec.fill_value),
        )
        pixels = np.asarray(rotated)
    if spec.hflip:
        pixels = pixels[:, ::-1]
    if spec.vflip:
        pixels = pixels[::-1, :]
    return Heightmap(np.ascontiguousarray(pixels), h.value_range, h.source_bit_depth)


class RejectReason(Enum):
    """Why a tile was dropped from the corpus."""
    NONE = "none"
    WATER = "water"
    FILL_SENTINEL = "fill_sentinel"


@dataclass(frozen=True)
class FilterDecision:
    kept: bool
    reason: RejectReason
    low_ratio: float
    sentinel_count: int


def filter_tile(
    t: Heightmap,
    low_threshold: int = 25,
    low_fraction: float = 0.95,
    sentinel: Optional[int] = 255,
) -> FilterDecision:
    """
    Reject mostly-water tiles and tiles touched by augmentation fill.

    A tile is rejected when the share of pixels <= low_threshold is >= low_fraction,
    or when any pixel equals the sentinel.
    """
    pixels = t.pixels
    total = pixels.size
    low_ratio = np.count_nonzero(pixels <= low_threshold) / total
    sentinel_count = int(np.count_nonzero(pixels == sentinel)) if sentinel is not None else 0

    if low_ratio >= low_fraction:
        reason = RejectReason.WATER
    elif sentinel_count > 0:
        reason = RejectReason.FILL_SENTINEL
    else:
        reason = RejectReason.NONE
    return FilterDecision(reason is RejectReason.NONE, reason, float(low_ratio), sentinel_count)


def downscale_nn(h: Heightmap, target: int) -> Heightmap:
    """
    Nearest-neighbour resample to target x target.

    Output pixel (i, j) copies source pixel (floor(i*H/target), floor(j*W/target)),
    the top-left convention of OpenCV's INTER_NEAREST.
    """
    if target < 1:
        raise RasterFormatError(f"target must be >= 1, got {target}")
    if h.width == target and h.height == target:
        return h.copy()
    resized = cv2.resize(
        np.ascontiguousarray(h.pixels),
        (target, target),
        interpolation=cv2.INTER_NEAREST,
    )
    return Heightmap(resized, h.value_range, h.source_bit_depth)
