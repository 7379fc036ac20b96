from .heightmap import Heightmap, NormRange, normalize, normalize_array, denormalize
from .raster import (
    load_raster,
    BrightnessCurve,
    brightness_remap,
    tile_offsets,
    count_tiles,
    iter_tiles,
    crop_sliding,
    AugmentSpec,
    augment,
    RejectReason,
    FilterDecision,
    filter_tile,
    downscale_nn,
)
from .manifest import CorpusManifest, ManifestEntry
from .corpus import TileCorpus, CorpusBuilder, build_corpus, draw_augment_spec
from .torch_dataset import TileDataset
