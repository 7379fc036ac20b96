"""Sampling heightmaps from trained generators."""

import math
from pathlib import Path
from typing import List, Optional, Union

import torch

from dataset.heightmap import Heightmap, denormalize
from export.images import montage, save_heightmap
from models.latent import LatentSource
from utils.errors import CheckpointError
from utils.logging import get_logger
from .checkpoint import load_checkpoint

logger = get_logger(__name__)


def generate(
    checkpoint: Union[str, Path],
    latent: Optional[LatentSource] = None,
    n: int = 16,
    seed: int = 0,
    device: str = "cpu",
) -> List[Heightmap]:
    """
    Draw ``n`` heightmaps from a generator or decoder checkpoint.

    Args:
        checkpoint: Checkpoint written during training
        latent: Latent source; defaults to standard normal at the model's input width
        n: Number of tiles
        seed: Seed for the latent draw
        device: Torch device

    Returns:
        8-bit heightmaps, identical for identical seeds

    Raises:
        CheckpointError: Corrupt checkpoint or latent width mismatch
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    network, meta = load_checkpoint(checkpoint, device)
    latent_dim = network.spec.input_shape[0]
    if latent is None:
        latent = LatentSource(dim=latent_dim)
    if latent.dim != latent_dim:
        raise CheckpointError(f"{checkpoint} takes {latent_dim}-wide latents, source gives {latent.dim}")
    if n == 0:
        return []

    z = latent.sample(n, torch.Generator().manual_seed(seed), device)
    with torch.no_grad():
        images = network(z).cpu()
    logger.info(f"Generated {n} tiles from {checkpoint}")
    return [denormalize(img, meta["norm_range"]) for img in images]


def write_samples(
    tiles: List[Heightmap],
    out_dir: Union[str, Path],
    columns: Optional[int] = None,
    separator: int = 1,
    separator_value: int = 255,
) -> List[Path]:
    """Write ``sample_XXX.png`` per tile and a ``montage.png`` grid."""
    out_dir = Path(out_dir)
    paths = [save_heightmap(tile, out_dir / f"sample_{i:03d}.png") for i, tile in enumerate(tiles)]
    if tiles:
        columns = columns or max(1, math.ceil(math.sqrt(len(tiles))))
        grid = montage(tiles, columns, separator, separator_value)
        paths.append(save_heightmap(grid, out_dir / "montage.png"))
    return paths
