"""Tests for raster ingestion, tiling, filtering and corpus building."""

import numpy as np
import pytest
import torch
from loguru import logger
from PIL import Image

from dataset import (
    AugmentSpec,
    BrightnessCurve,
    CorpusManifest,
    Heightmap,
    NormRange,
    RejectReason,
    TileCorpus,
    TileDataset,
    augment,
    brightness_remap,
    build_corpus,
    count_tiles,
    crop_sliding,
    denormalize,
    downscale_nn,
    filter_tile,
    load_raster,
    normalize,
    tile_offsets,
)
from utils.errors import CorpusError, RasterFormatError


def pattern_raster(size: int, lo: int = 60, span: int = 120) -> Heightmap:
    ramp = np.arange(size) % span
    return Heightmap((lo + (ramp[:, None] + ramp[None, :]) % span).astype(np.uint8))


class TestLoadRaster:
    """Test single-channel raster loading."""

    def test_eight_bit_round_trip(self, tmp_path, rng):
        pixels = rng.integers(0, 256, (20, 30), dtype=np.uint8)
        Image.fromarray(pixels).save(tmp_path / "dem.png")
        h = load_raster(tmp_path / "dem.png")
        assert h.shape == (20, 30)
        assert np.array_equal(h.pixels, pixels)
        assert h.source_bit_depth == 8

    def test_sixteen_bit_is_rescaled(self, tmp_path):
        pixels = np.array([[0, 65535], [257, 32896]], dtype=np.uint16)
        Image.fromarray(pixels).save(tmp_path / "dem16.png")
        h = load_raster(tmp_path / "dem16.png")
        assert h.source_bit_depth == 16
        assert h.pixels.tolist() == [[0, 255], [1, 128]]

    def test_load_logs_at_debug(self, tmp_path):
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(tmp_path / "quiet.png")
        levels = []
        sink = logger.add(lambda message: levels.append(message.record["level"].name), level="DEBUG",
                          filter=lambda record: "quiet.png" in record["message"])
        try:
            load_raster(tmp_path / "quiet.png")
        finally:
            logger.remove(sink)
        assert levels == ["DEBUG"]

    def test_rgb_rejected(self, tmp_path):
        Image.new("RGB", (4, 4)).save(tmp_path / "rgb.png")
        with pytest.raises(RasterFormatError):
            load_raster(tmp_path / "rgb.png")

    def test_garbage_rejected(self, tmp_path):
        (tmp_path / "bad.png").write_bytes(b"not an image")
        with pytest.raises(RasterFormatError):
            load_raster(tmp_path / "bad.png")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_raster(tmp_path / "nope.png")


class TestBrightness:
    """Test monotone brightness curves."""

    def test_gamma_half(self):
        h = Heightmap(np.array([[0, 64, 255]], dtype=np.uint8))
        out = brightness_remap(h, BrightnessCurve.gamma(0.5))
        # 255 * (64/255) ** 0.5 = 127.75
        assert out.pixels.tolist() == [[0, 128, 255]]

    def test_identity_curve(self, rng):
        h = Heightmap(rng.integers(0, 256, (8, 8), dtype=np.uint8))
        assert brightness_remap(h, BrightnessCurve.identity()) == h

    def test_gamma_is_monotone(self):
        assert np.all(np.diff(BrightnessCurve.gamma(0.5).lut.astype(int)) >= 0)

    def test_decreasing_curve_rejected(self):
        with pytest.raises(RasterFormatError):
            BrightnessCurve(np.arange(256)[::-1])

    def test_callable_curve(self):
        h = Heightmap(np.array([[10, 20]], dtype=np.uint8))
        out = brightness_remap(h, lambda v: np.minimum(v * 2, 255))
        assert out.pixels.tolist() == [[20, 40]]


class TestCropping:
    """Test sliding-window cropping."""

    def test_world_mosaic_count(self):
        # Lazily materialized: no 777 MB allocation.
        raster = Heightmap(np.broadcast_to(np.uint8(100), (18000, 43200)))
        assert count_tiles(43200, 18000, 1024, 512) == 2822
        assert len(crop_sliding(raster, 1024, 512)) == 2822

    def test_exact_fit_single_tile(self):
        h = pattern_raster(32)
        tiles = crop_sliding(h, 32, 16)
        assert len(tiles) == 1
        assert tiles[0] == h

    def test_offsets_row_major(self):
        assert tile_offsets(6, 4, 2, 2) == [(0, 0), (0, 2), (0, 4), (2, 0), (2, 2), (2, 4)]

    def test_tiles_are_views(self):
        h = pattern_raster(64)
        tile = crop_sliding(h, 32, 32)[3]
        assert np.shares_memory(tile.pixels, h.pixels)
        assert np.array_equal(tile.pixels, h.pixels[32:64, 32:64])

    def test_tile_too_large(self):
        with pytest.raises(RasterFormatError):
            crop_sliding(pattern_raster(16), 32, 8)


class TestAugment:
    """Test rotation and flips."""

    def test_identity(self):
        h = pattern_raster(16)
        assert augment(h, AugmentSpec()) == h

    def test_half_turn_is_exact(self):
        h = pattern_raster(16)
        out = augment(h, AugmentSpec(rotation_degrees=180))
        assert np.array_equal(out.pixels, np.rot90(h.pixels, 2))

    def test_rotation_fills_corners_with_sentinel(self):
        h = Heightmap(np.full((32, 32), 100, dtype=np.uint8))
        out = augment(h, AugmentSpec(rotation_degrees=45))
        assert out.pixels[0, 0] == 255
        assert out.pixels[16, 16] == 100

    def test_flips(self):
        h = pattern_raster(8)
        assert np.array_equal(augment(h, AugmentSpec(hflip=True)).pixels, h.pixels[:, ::-1])
        assert np.array_equal(augment(h, AugmentSpec(vflip=True)).pixels, h.pixels[::-1, :])

    def test_rotation_out_of_range(self):
        with pytest.raises(RasterFormatError):
            AugmentSpec(rotation_degrees=200)


class TestFilter:
    """Test water and sentinel rejection."""

    def test_all_water(self):
        decision = filter_tile(Heightmap(np.zeros((8, 8), dtype=np.uint8)))
        assert not decision.kept
        assert decision.reason == RejectReason.WATER

    def test_single_sentinel_pixel(self):
        pixels = np.full((8, 8), 120, dtype=np.uint8)
        pixels[3, 4] = 255
        decision = filter_tile(Heightmap(pixels))
        assert decision.reason == RejectReason.FILL_SENTINEL
        assert decision.sentinel_count == 1

    def test_threshold_is_inclusive(self):
        pixels = np.full((10, 10), 25, dtype=np.uint8)
        pixels.flat[:5] = 200
        assert filter_tile(Heightmap(pixels)).reason == RejectReason.WATER
        pixels.flat[:6] = 200
        assert filter_tile(Heightmap(pixels)).kept

    def test_matches_brute_force_counter(self, rng):
        for _ in range(1000):
            water = rng.uniform(0.85, 1.0)
            pixels = np.where(rng.random((32, 32)) < water,
                              rng.integers(0, 26, (32, 32)), rng.integers(26, 255, (32, 32)))
            if rng.random() < 0.2:
                pixels[rng.integers(32), rng.integers(32)] = 255
            pixels = pixels.astype(np.uint8)

            flat = pixels.ravel().tolist()
            low = sum(1 for v in flat if v <= 25)
            expected_reject = low >= 0.95 * len(flat) or any(v == 255 for v in flat)
            assert filter_tile(Heightmap(pixels)).kept == (not expected_reject)


class TestDownscale:
    """Test nearest-neighbour resampling."""

    def test_integer_ratio_takes_top_left(self):
        h = Heightmap(np.arange(64, dtype=np.uint8).reshape(8, 8))
        assert np.array_equal(downscale_nn(h, 4).pixels, h.pixels[::2, ::2])

    def test_same_size_is_copy(self):
        h = pattern_raster(16)
        out = downscale_nn(h, 16)
        assert out == h
        assert not np.shares_memory(out.pixels, h.pixels)

    def test_values_preserved(self, rng):
        h = Heightmap(rng.integers(0, 256, (1024, 1024), dtype=np.uint8))
        out = downscale_nn(h, 128)
        assert out.shape == (128, 128)
        assert set(np.unique(out.pixels)) <= set(np.unique(h.pixels))


class TestNormalize:
    """Test model input normalization."""

    def test_signed_endpoints(self):
        x = normalize(Heightmap(np.array([[0, 255]], dtype=np.uint8)), NormRange.SIGNED)
        assert x.shape == (1, 1, 2)
        assert x.tolist() == [[[-1.0, 1.0]]]

    def test_unit_endpoints(self):
        x = normalize(Heightmap(np.array([[0, 255]], dtype=np.uint8)), "[0,1]")
        assert x.tolist() == [[[0.0, 1.0]]]

    @pytest.mark.parametrize("norm_range", [NormRange.SIGNED, NormRange.UNIT])
    def test_denormalize_inverts(self, rng, norm_range):
        h = Heightmap(rng.integers(0, 256, (16, 16), dtype=np.uint8))
        assert denormalize(normalize(h, norm_range), norm_range) == h

    def test_denormalize_clamps(self):
        h = denormalize(torch.tensor([[-3.0, 3.0]]), NormRange.SIGNED)
        assert h.pixels.tolist() == [[0, 255]]


class TestCorpus:
    """Test multi-round corpus building and persistence."""

    def setup_method(self):
        self.source = pattern_raster(64)

    def test_first_round_is_untransformed(self):
        corpus = build_corpus(self.source, rounds=1, tile=32, stride=16, target=16, seed=0, progress=False)
        assert len(corpus.manifest.entries) == 9
        assert corpus.manifest.kept_count == 9
        assert all(e.source_transform.is_identity for e in corpus.manifest.entries)
        assert corpus.resolution == 16

    def test_kept_tiles_pass_the_filter(self):
        pixels = pattern_raster(64).pixels.copy()
        pixels[:32, :32] = 0
        pixels[40, 40] = 255
        corpus = build_corpus(Heightmap(pixels), rounds=2, tile=32, stride=16, target=32, seed=5,
                              progress=False)

        entries = corpus.manifest.entries
        reasons = {e.reject_reason for e in entries}
        assert corpus.manifest.kept_count < len(entries)
        assert {RejectReason.WATER, RejectReason.FILL_SENTINEL} <= reasons
        assert len(corpus.tiles) == corpus.manifest.kept_count
        assert all(filter_tile(t).kept for t in corpus.tiles)

    def test_rounds_and_determinism(self):
        a = build_corpus(self.source, rounds=3, tile=32, stride=16, target=16, seed=7, progress=False)
        b = build_corpus(self.source, rounds=3, tile=32, stride=16, target=16, seed=7, progress=False)
        assert len(a.manifest.entries) == 27
        assert [e.to_dict() for e in a.manifest.entries] == [e.to_dict() for e in b.manifest.entries]
        assert all(np.array_equal(x.pixels, y.pixels) for x, y in zip(a.tiles, b.tiles))

    def test_threaded_matches_sequential(self):
        seq = build_corpus(self.source, rounds=2, tile=32, stride=16, target=16, seed=3, progress=False)
        par = build_corpus(self.source, rounds=2, tile=32, stride=16, target=16, seed=3,
                           workers=4, progress=False)
        assert [e.tile_id for e in seq.manifest.entries] == [e.tile_id for e in par.manifest.entries]
        assert np.array_equal(seq.as_array(), par.as_array())

    def test_save_load_round_trip(self, tmp_path):
        corpus = build_corpus(self.source, rounds=2, tile=32, stride=16, target=16, seed=1, progress=False)
        corpus.save(tmp_path / "corpus")
        loaded = TileCorpus.load(tmp_path / "corpus")
        assert loaded.tile_ids == corpus.tile_ids
        assert np.array_equal(loaded.as_array(), corpus.as_array())
        assert loaded.manifest.get_stats() == corpus.manifest.get_stats()

    def test_zero_rounds_rejected(self):
        with pytest.raises(CorpusError):
            build_corpus(self.source, rounds=0, tile=32, stride=16, target=16)

    def test_malformed_manifest(self, tmp_path):
        (tmp_path / "manifest.jsonl").write_text('{"record": "corpus"}\n{broken\n')
        with pytest.raises(CorpusError, match=":2:"):
            CorpusManifest.load(tmp_path)


class TestTileDataset:
    """Test the torch dataset view."""

    def test_shapes_and_range(self, tiles32):
        ds = TileDataset(tiles32, NormRange.SIGNED)
        assert len(ds) == 8
        assert ds[0].shape == (1, 32, 32)
        assert ds.data.min() >= -1 and ds.data.max() <= 1

    def test_resize(self, corpus32):
        ds = TileDataset(corpus32, NormRange.UNIT, size=16)
        assert ds.resolution == 16
        assert ds[0].shape == (1, 16, 16)

    def test_empty_rejected(self):
        with pytest.raises(CorpusError):
            TileDataset(np.zeros((0, 8, 8), dtype=np.uint8))
