"""Heightmap image files and montage grids."""

from pathlib import Path
from typing import Sequence, Union

import numpy as np
from PIL import Image

from dataset.heightmap import Heightmap
from utils.errors import RasterFormatError
from utils.logging import get_logger

logger = get_logger(__name__)


def save_heightmap(h: Heightmap, path: Union[str, Path]) -> Path:
    """
    Write an 8-bit single-channel PNG.

    Args:
        h: Heightmap to write
        path: Destination (parent directories are created)

    Returns:
        Written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(h.pixels, dtype=np.uint8)).save(path, format="PNG")
    logger.debug(f"Saved heightmap {h.width}x{h.height} to {path}")
    return path


def montage(
    tiles: Sequence[Heightmap],
    columns: int,
    separator: int = 1,
    separator_value: int = 255,
) -> Heightmap:
    """
    Arrange equally sized tiles in a row-major grid.

    Output size is ``n * tile + (n - 1) * separator`` along each axis. Empty
    cells of an incomplete last row are filled with ``separator_value``.

    Args:
        tiles: Tiles to place
        columns: Grid width in tiles
        separator: Gap in pixels between cells
        separator_value: Intensity of gaps and padding

    Returns:
        Montage heightmap

    Raises:
        RasterFormatError: If tiles is empty or sizes differ
    """
    if not tiles:
        raise RasterFormatError("montage needs at least one tile")
    if columns < 1:
        raise RasterFormatError(f"columns must be >= 1, got {columns}")
    th, tw = tiles[0].shape
    if any(t.shape != (th, tw) for t in tiles):
        raise RasterFormatError("montage tiles must all have the same size")

    cols = min(columns, len(tiles))
    rows = -(-len(tiles) // cols)
    height = rows * th + (rows - 1) * separator
    width = cols * tw + (cols - 1) * separator
    canvas = np.full((height, width), separator_value, dtype=np.uint8)

    for i, tile in enumerate(tiles):
        r, c = divmod(i, cols)
        y = r * (th + separator)
        x = c * (tw + separator)
        canvas[y:y + th, x:x + tw] = tile.pixels
    return Heightmap(canvas)
