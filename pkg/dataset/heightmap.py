"""Heightmap raster type and value-range normalization."""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np
import torch

from utils.errors import RasterFormatError


class NormRange(Enum):
    """Target ranges for model inputs."""
    SIGNED = "[-1,1]"   # tanh-output models
    UNIT = "[0,1]"      # sigmoid-output models

    @classmethod
    def parse(cls, value: Union[str, "NormRange"]) -> "NormRange":
        if isinstance(value, cls):
            return value
        aliases = {"signed": cls.SIGNED, "tanh": cls.SIGNED, "unit": cls.UNIT, "sigmoid": cls.UNIT}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)

    @property
    def bounds(self) -> Tuple[float, float]:
        return (-1.0, 1.0) if self is NormRange.SIGNED else (0.0, 1.0)


@dataclass(frozen=True, eq=False)
class Heightmap:
    """Single-channel raster where intensity encodes altitude.

    ``pixels`` is a (height, width) uint8 array. Slices of a larger raster
    are kept as views, so cropping never copies.
    """
    pixels: np.ndarray
    value_range: Tuple[float, float] = (0.0, 255.0)
    source_bit_depth: int = 8

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise RasterFormatError(f"Heightmap must be 2D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise RasterFormatError(f"Heightmap has a zero dimension: {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
                raise RasterFormatError("Heightmap pixel values must lie in [0, 255]")
            arr = np.rint(arr).astype(np.uint8)
        lo, hi = self.value_range
        if not hi > lo:
            raise RasterFormatError(f"Invalid value_range {self.value_range}")
        object.__setattr__(self, "pixels", arr)
        object.__setattr__(self, "value_range", (float(lo), float(hi)))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    def copy(self) -> "Heightmap":
        return Heightmap(np.array(self.pixels, copy=True), self.value_range, self.source_bit_depth)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Heightmap):
            return NotImplemented
        return self.value_range == other.value_range and np.array_equal(self.pixels, other.pixels)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Heightmap({self.width}x{self.height}, range={self.value_range})"


def _to_unit(pixels: np.ndarray, value_range: Tuple[float, float]) -> np.ndarray:
    lo, hi = value_range
    return (pixels.astype(np.float32) - np.float32(lo)) / np.float32(hi - lo)


def normalize_array(pixels: np.ndarray, norm_range: Union[str, NormRange],
                    value_range: Tuple[float, float] = (0.0, 255.0)) -> np.ndarray:
    """Affinely map raw intensities of any shape onto ``norm_range`` (float32)."""
    unit = _to_unit(pixels, value_range)
    if NormRange.parse(norm_range) is NormRange.SIGNED:
        return unit * np.float32(2.0) - np.float32(1.0)
    return unit


def normalize(t: Heightmap, norm_range: Union[str, NormRange] = NormRange.SIGNED) -> torch.Tensor:
    """
    Map a tile onto the model input range.

    Args:
        t: Tile to normalize
        norm_range: ``[-1,1]`` for tanh generators, ``[0,1]`` for sigmoid decoders

    Returns:
        float32 tensor of shape (1, height, width)
    """
    values = normalize_array(t.pixels, norm_range, t.value_range)
    return torch.from_numpy(np.ascontiguousarray(values)).unsqueeze(0)


def denormalize(x: Union[torch.Tensor, np.ndarray], norm_range: Union[str, NormRange] = NormRange.SIGNED) -> Heightmap:
    """
    Inverse of :func:`normalize`, rounding to the nearest intensity.

    Args:
        x: (H, W) or (1, H, W) values in ``norm_range`` (out-of-range values are clamped)
        norm_range: Range the values are expressed in

    Returns:
        8-bit heightmap
    """
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().numpy()
    values = np.asarray(x, dtype=np.float64)
    if values.ndim == 3 and values.shape[0] == 1:
        values = values[0]
    if NormRange.parse(norm_range) is NormRange.SIGNED:
        values = (values + 1.0) / 2.0
    pixels = np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8)
    return Heightmap(pixels)
