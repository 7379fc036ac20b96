"""PyTorch view over a tile corpus."""

from typing import Optional, Union

import numpy as np
import torch
from torch.utils.data import Dataset

from dataset.corpus import TileCorpus
from dataset.heightmap import Heightmap, NormRange, normalize_array
from dataset.raster import downscale_nn
from utils.errors import CorpusError


class TileDataset(Dataset):
    """Normalized (1, S, S) float tensors, optionally resampled to a stage resolution."""

    def __init__(
        self,
        tiles: Union[TileCorpus, np.ndarray],
        norm_range: Union[str, NormRange] = NormRange.SIGNED,
        size: Optional[int] = None,
    ):
        """
        Args:
            tiles: Corpus or (N, H, W) uint8 array
            norm_range: Model input range
            size: Nearest-neighbour resample tiles to this size when set
        """
        array = tiles.as_array() if isinstance(tiles, TileCorpus) else np.asarray(tiles, dtype=np.uint8)
        if array.ndim != 3 or array.shape[0] == 0:
            raise CorpusError(f"Expected a non-empty (N, H, W) tile stack, got {array.shape}")
        if size is not None and size != array.shape[1]:
            array = np.stack([downscale_nn(Heightmap(t), size).pixels for t in array])

        self.norm_range = NormRange.parse(norm_range)
        self.resolution = int(array.shape[1])
        self.data = torch.from_numpy(normalize_array(array, self.norm_range)).unsqueeze(1)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, idx: int) -> torch.Tensor:
        return self.data[idx]
