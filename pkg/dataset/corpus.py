"""Corpus building: augment, crop, filter and downscale a source raster over several rounds."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from dataset.heightmap import Heightmap
from dataset.manifest import CorpusManifest, ManifestEntry, MANIFEST_NAME
from dataset.raster import (
    AugmentSpec,
    augment,
    downscale_nn,
    filter_tile,
    load_raster,
    tile_offsets,
)
from utils.errors import CorpusError
from utils.logging import get_logger

logger = get_logger(__name__)

TILES_DIR = "tiles"


def draw_augment_spec(rng: np.random.Generator, fill_value: int = 255) -> AugmentSpec:
    """Rotation uniform in [0, 180]; each flip independent with probability 0.5."""
    rotation = float(rng.uniform(0.0, 180.0))
    hflip = bool(rng.random() < 0.5)
    vflip = bool(rng.random() < 0.5)
    return AugmentSpec(rotation, hflip, vflip, fill_value)


def tile_id_for(round_index: int, row: int, col: int) -> str:
    return f"r{round_index:02d}_y{row:05d}_x{col:05d}"


@dataclass
class TileCorpus:
    """Kept, downscaled tiles in manifest order plus the manifest itself."""
    tiles: List[Heightmap]
    manifest: CorpusManifest
    tile_ids: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.tile_ids:
            self.tile_ids = [e.tile_id for e in self.manifest.kept_entries()]
        if len(self.tile_ids) != len(self.tiles):
            raise CorpusError(f"{len(self.tiles)} tiles but {len(self.tile_ids)} kept manifest entries")

    def __len__(self) -> int:
        return len(self.tiles)

    @property
    def resolution(self) -> int:
        if not self.tiles:
            raise CorpusError("Corpus is empty")
        return self.tiles[0].width

    def as_array(self) -> np.ndarray:
        """Stack tiles into an (N, H, W) uint8 array."""
        if not self.tiles:
            raise CorpusError("Corpus is empty")
        return np.stack([t.pixels for t in self.tiles])

    @classmethod
    def from_array(cls, tiles: np.ndarray, seed: int = 0) -> "TileCorpus":
        """Wrap an (N, H, W) uint8 array as a single-round corpus (synthetic or in-memory data)."""
        tiles = np.asarray(tiles)
        if tiles.ndim != 3 or tiles.shape[1] != tiles.shape[2]:
            raise CorpusError(f"Expected (N, S, S) tiles, got {tiles.shape}")
        size = int(tiles.shape[1])
        entries = [
            ManifestEntry(tile_id_for(1, 0, i), 1, 0, i, AugmentSpec(), True)
            for i in range(tiles.shape[0])
        ]
        manifest = CorpusManifest(size, size, 1, size, seed, entries)
        return cls([Heightmap(t) for t in tiles], manifest)

    def save(self, directory: Union[str, Path]) -> Path:
        """Write one 8-bit image per kept tile plus the manifest."""
        from export.images import save_heightmap

        directory = Path(directory)
        tiles_dir = directory / TILES_DIR
        tiles_dir.mkdir(parents=True, exist_ok=True)
        for tile_id, tile in zip(self.tile_ids, self.tiles):
            save_heightmap(tile, tiles_dir / f"{tile_id}.png")
        self.manifest.save(directory / MANIFEST_NAME)
        logger.info(f"Saved {len(self.tiles)} tiles to {directory}")
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "TileCorpus":
        """Read a corpus written by :meth:`save`."""
        directory = Path(directory)
        manifest = CorpusManifest.load(directory / MANIFEST_NAME)
        tiles = []
        for entry in manifest.kept_entries():
            tile_path = directory / TILES_DIR / f"{entry.tile_id}.png"
            if not tile_path.exists():
                raise CorpusError(f"Missing tile image {tile_path}")
            tiles.append(load_raster(tile_path))
        logger.info(f"Loaded corpus {directory} ({len(tiles)} tiles)")
        return cls(tiles, manifest)


class CorpusBuilder:
    """Run the multi-round augment/crop/filter/downscale procedure."""

    def __init__(
        self,
        tile: int = 1024,
        stride: int = 512,
        target: int = 128,
        low_threshold: int = 25,
        low_fraction: float = 0.95,
        sentinel: Optional[int] = 255,
        fill_value: int = 255,
        workers: int = 1,
        progress: bool = True,
    ):
        """
        Initialize the builder.

        Args:
            tile: Crop window size in source pixels
            stride: Sliding-window step
            target: Output tile size after nearest-neighbour downscale
            low_threshold: Intensity at or below which a pixel counts as water
            low_fraction: Water share at which a tile is rejected
            sentinel: Fill intensity that marks augmentation gaps
            fill_value: Intensity written into uncovered pixels on rotation
            workers: Threads for per-tile work (1 = sequential)
            progress: Show a tqdm bar over rounds
        """
        self.tile = tile
        self.stride = stride
        self.target = target
        self.low_threshold = low_threshold
        self.low_fraction = low_fraction
        self.sentinel = sentinel
        self.fill_value = fill_value
        self.workers = max(1, int(workers))
        self.progress = progress

    def _process(self, raster: Heightmap, round_index: int, spec: AugmentSpec,
                 offset: Tuple[int, int]) -> Tuple[ManifestEntry, Optional[Heightmap]]:
        row, col = offset
        view = Heightmap(raster.pixels[row:row + self.tile, col:col + self.tile], raster.value_range)
        decision = filter_tile(view, self.low_threshold, self.low_fraction, self.sentinel)
        entry = ManifestEntry(
            tile_id=tile_id_for(round_index, row, col),
            round=round_index,
            row=row,
            col=col,
            source_transform=spec,
            kept=decision.kept,
            reject_reason=decision.reason,
            low_ratio=decision.low_ratio,
            sentinel_count=decision.sentinel_count,
        )
        kept_tile = downscale_nn(view, self.target) if decision.kept else None
        return entry, kept_tile

    def build(self, source: Heightmap, rounds: int, seed: int) -> TileCorpus:
        """
        Build the corpus.

        Round 1 crops the untransformed source; later rounds draw an AugmentSpec
        from a generator seeded with ``seed``.
        """
        if rounds < 1:
            raise CorpusError(f"rounds must be >= 1, got {rounds}")
        offsets = tile_offsets(source.width, source.height, self.tile, self.stride)
        rng = np.random.default_rng(seed)
        manifest = CorpusManifest(self.tile, self.stride, rounds, self.target, seed)
        tiles: List[Heightmap] = []

        executor = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        try:
            for round_index in tqdm(range(1, rounds + 1), desc="Corpus rounds", disable=not self.progress):
                spec = AugmentSpec(fill_value=self.fill_value) if round_index == 1 else \
                    draw_augment_spec(rng, self.fill_value)
                raster = source if spec.is_identity else augment(source, spec)

                def work(offset, _raster=raster, _round=round_index, _spec=spec):
                    return self._process(_raster, _round, _spec, offset)

                # map() preserves (row, col) order regardless of completion order
                results = executor.map(work, offsets) if executor else map(work, offsets)
                kept_this_round = 0
                for entry, kept_tile in results:
                    manifest.entries.append(entry)
                    if kept_tile is not None:
                        tiles.append(kept_tile)
                        kept_this_round += 1
                logger.info(
                    f"Round {round_index}/{rounds} ({spec.rotation_degrees:.1f} deg, "
                    f"hflip={spec.hflip}, vflip={spec.vflip}): kept {kept_this_round}/{len(offsets)}"
                )
        finally:
            if executor:
                executor.shutdown()

        logger.info(f"Corpus built: {manifest.kept_count} kept of {len(manifest.entries)} tiles")
        return TileCorpus(tiles, manifest)


def build_corpus(
    source: Heightmap,
    rounds: int = 15,
    tile: int = 1024,
    stride: int = 512,
    target: int = 128,
    seed: int = 0,
    **kwargs,
) -> TileCorpus:
    """
    Build a filtered, augmented, downscaled tile corpus.

    Args:
        source: Brightness-remapped source raster
        rounds: Augmentation passes (round 1 is untransformed)
        tile: Crop size
        stride: Sliding-window step
        target: Downscaled tile size
        seed: Seed for augmentation draws
        **kwargs: Extra CorpusBuilder options (thresholds, workers, progress)

    Returns:
        TileCorpus whose ``manifest`` records every cropped tile
    """
    return CorpusBuilder(tile=tile, stride=stride, target=target, **kwargs).build(source, rounds, seed)
