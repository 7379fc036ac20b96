"""Triangle meshes from heightmaps and the OBJ writer."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from dataset.heightmap import Heightmap
from utils.errors import RasterFormatError
from utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class TerrainMesh:
    """Grid mesh: one vertex per pixel, two triangles per pixel quad."""
    vertices: np.ndarray   # (W*H, 3) float64, x/y in tile units
    faces: np.ndarray      # (2*(W-1)*(H-1), 3) int64, 0-based

    def __post_init__(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise RasterFormatError(f"vertices must be (n, 3), got {self.vertices.shape}")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise RasterFormatError(f"faces must be (m, 3), got {self.faces.shape}")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise RasterFormatError("face index out of range")

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def face_count(self) -> int:
        return int(self.faces.shape[0])


def heightmap_to_mesh(h: Heightmap, height_scale: Optional[float] = None) -> TerrainMesh:
    """
    Lift a heightmap into a regular triangle grid.

    Vertex (row i, col j) sits at x = j, y = height - 1 - i (image top is +y),
    z = height_scale * pixel / 255. Every quad splits into two triangles wound
    counter-clockwise when viewed from +z.

    Args:
        h: Source heightmap (at least 2x2)
        height_scale: Relief height in tile units; defaults to 0.25 * width

    Returns:
        TerrainMesh
    """
    if h.width < 2 or h.height < 2:
        raise RasterFormatError(f"mesh needs at least 2x2 pixels, got {h.width}x{h.height}")
    if height_scale is None:
        height_scale = 0.25 * h.width

    rows, cols = h.height, h.width
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    z = height_scale * h.pixels.astype(np.float64) / 255.0
    vertices = np.stack([jj.ravel(), (rows - 1 - ii).ravel(), z.ravel()], axis=1).astype(np.float64)

    index = np.arange(rows * cols).reshape(rows, cols)
    a = index[:-1, :-1].ravel()   # top-left
    b = index[:-1, 1:].ravel()    # top-right
    c = index[1:, :-1].ravel()    # bottom-left
    d = index[1:, 1:].ravel()     # bottom-right
    faces = np.empty((2 * a.size, 3), dtype=np.int64)
    faces[0::2] = np.stack([a, c, d], axis=1)
    faces[1::2] = np.stack([a, d, b], axis=1)
    return TerrainMesh(vertices, faces)


def save_mesh_obj(m: TerrainMesh, path: Union[str, Path]) -> Path:
    """
    Write ``v x y z`` lines then ``f a b c`` lines with 1-based indices.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x, y, z in m.vertices:
            fh.write(f"v {x:.6f} {y:.6f} {z:.6f}\n")
        for a, b, c in m.faces + 1:
            fh.write(f"f {a} {b} {c}\n")
    logger.info(f"Wrote mesh ({m.vertex_count} vertices, {m.face_count} faces) to {path}")
    return path
