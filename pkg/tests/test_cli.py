"""Tests for the terrain-gan command line."""

import json
from argparse import Namespace
from pathlib import Path

import numpy as np
import pytest

from app.cli import (
    EXIT_ABORTED,
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    INSPECT_CHOICES,
    UsageError,
    resolve_train_config,
    run,
)
from config import get_config
from dataset import Heightmap, TileCorpus
from export import save_heightmap
from tests.conftest import land_tiles
from training import DCGANTrainer, Variant

GOLDEN_DIR = Path(__file__).parent / "golden"


def train_args(**overrides):
    values = dict(variant=None, preset=None, corpus="corpus", epochs=None, vae_epochs=None,
                  desk_scale=False, seed=None, batch_size=None, image_size=None,
                  checkpoint_every=None, decoder_checkpoint=None, device=None, out=None)
    values.update(overrides)
    return Namespace(**values)


@pytest.fixture
def corpus_dir(fresh_config, corpus32):
    return corpus32.save(fresh_config / "corpus")


class TestInspect:
    """Test the layer table command."""

    @pytest.mark.parametrize("model", INSPECT_CHOICES)
    def test_matches_golden_table(self, fresh_config, capsys, model):
        assert run(["inspect", "--model", model]) == EXIT_OK
        expected = (GOLDEN_DIR / "inspect" / f"{model}.txt").read_text()
        assert capsys.readouterr().out == expected

    def test_small_size(self, fresh_config, capsys):
        assert run(["inspect", "--model", "dcgan-g", "--size", "32"]) == EXIT_OK
        assert capsys.readouterr().out.rstrip().endswith("1x32x32")

    def test_unknown_model(self, fresh_config, capsys):
        assert run(["inspect", "--model", "resnet"]) == EXIT_USAGE
        assert "usage:" in capsys.readouterr().err


class TestUsage:
    """Test argument errors."""

    def test_unknown_flag(self, fresh_config, capsys):
        assert run(["plot", "--log", "x.csv", "--out", "o", "--colour"]) == EXIT_USAGE
        assert "usage:" in capsys.readouterr().err

    def test_missing_command(self, fresh_config, capsys):
        assert run([]) == EXIT_USAGE

    def test_help(self, fresh_config, capsys):
        assert run(["--help"]) == EXIT_OK
        assert "dataset-build" in capsys.readouterr().out


class TestResolveTrainConfig:
    """Test how flags, presets and config.yaml combine."""

    def test_needs_variant_or_preset(self, fresh_config):
        with pytest.raises(UsageError):
            resolve_train_config(train_args(epochs=3), get_config(), 32)

    def test_needs_epochs(self, fresh_config):
        with pytest.raises(UsageError):
            resolve_train_config(train_args(preset="e5"), get_config(), 32)

    def test_preset_with_epoch_override(self, fresh_config):
        config = resolve_train_config(train_args(preset="e5", epochs=3, seed=9), get_config(), 32)
        assert config.variant == Variant.WGAN
        assert (config.epochs, config.seed, config.image_size) == (3, 9, 32)
        assert config.name == "e5"
        assert config.n_critic == 5

    def test_variant_overrides_preset(self, fresh_config):
        config = resolve_train_config(train_args(preset="e2", variant="dcgan", epochs=2), get_config(), 32)
        assert config.hindering.label_smoothing_beta == 0.2

    def test_desk_scale_proggan(self, fresh_config):
        config = resolve_train_config(train_args(preset="e7", desk_scale=True), get_config(), 32)
        assert config.stage_epochs == (200, 200, 200)
        assert config.epochs == 600

    def test_epochs_cover_every_proggan_stage(self, fresh_config):
        config = resolve_train_config(train_args(variant="proggan", epochs=4), get_config(), 32)
        assert config.stage_epochs == (4, 4, 4)

    def test_vae_wgan_phases(self, fresh_config):
        both = resolve_train_config(train_args(preset="e9", epochs=3), get_config(), 32)
        assert (both.vae_epochs, both.epochs) == (3, 3)
        split = resolve_train_config(train_args(preset="e9", epochs=3, vae_epochs=1), get_config(), 32)
        assert split.vae_epochs == 1
        desk = resolve_train_config(train_args(preset="e10", desk_scale=True), get_config(), 32)
        assert desk.vae_epochs == 50


class TestDatasetBuild:
    """Test corpus building from a raster file."""

    def test_square_raster(self, fresh_config, capsys):
        ramp = np.arange(4096) % 120
        pixels = (60 + (ramp[:, None] + ramp[None, :]) % 120).astype(np.uint8)
        source = save_heightmap(Heightmap(pixels), fresh_config / "dem.png")
        out = fresh_config / "corpus"

        code = run(["dataset-build", "--input", str(source), "--rounds", "1", "--out", str(out)])
        assert code == EXIT_OK
        assert "kept 49 of 49 tiles" in capsys.readouterr().out
        corpus = TileCorpus.load(out)
        assert corpus.as_array().shape == (49, 128, 128)

    def test_missing_raster(self, fresh_config):
        code = run(["dataset-build", "--input", str(fresh_config / "nope.png"),
                    "--out", str(fresh_config / "corpus")])
        assert code == EXIT_DATA


class TestTrainAndGenerate:
    """Test the train, generate and plot commands end to end."""

    def test_train_without_epochs(self, corpus_dir, capsys):
        assert run(["train", "--variant", "dcgan", "--corpus", str(corpus_dir)]) == EXIT_USAGE

    def test_bad_corpus(self, fresh_config):
        code = run(["train", "--variant", "dcgan", "--corpus", str(fresh_config / "missing"),
                    "--epochs", "1"])
        assert code == EXIT_DATA

    def test_vae_on_single_tile_corpus(self, fresh_config):
        corpus = TileCorpus.from_array(land_tiles(1, 32)).save(fresh_config / "one")
        code = run(["train", "--variant", "vae", "--corpus", str(corpus), "--epochs", "1",
                    "--batch-size", "2"])
        assert code == EXIT_DATA

    def test_aborted_training(self, corpus_dir, monkeypatch):
        monkeypatch.setattr(DCGANTrainer, "_train_epoch",
                            lambda self, loader, factor: {"loss_d": float("inf"), "loss_g": 0.0})
        code = run(["train", "--variant", "dcgan", "--corpus", str(corpus_dir), "--epochs", "1",
                    "--batch-size", "4"])
        assert code == EXIT_ABORTED

    def test_train_generate_plot(self, corpus_dir, capsys):
        runs = corpus_dir.parent / "runs"
        code = run(["train", "--variant", "dcgan", "--corpus", str(corpus_dir), "--epochs", "2",
                    "--batch-size", "4", "--checkpoint-every", "1"])
        assert code == EXIT_OK
        run_dir = runs / "dcgan"
        assert json.loads((run_dir / "config.json").read_text())["epochs"] == 2
        checkpoint = run_dir / "checkpoints" / "generator_final.pt"
        assert str(checkpoint) in capsys.readouterr().out

        samples = corpus_dir.parent / "samples"
        assert run(["generate", "--checkpoint", str(checkpoint), "--n", "4", "--out", str(samples)]) == EXIT_OK
        assert len(list(samples.glob("sample_*.png"))) == 4
        assert (samples / "montage.png").exists()

        plots = corpus_dir.parent / "plots"
        assert run(["plot", "--log", str(run_dir / "train_log.csv"), "--out", str(plots)]) == EXIT_OK
        assert (plots / "losses.svg").exists()
        assert (plots / "summary.json").exists()

    def test_learned_latent_needs_bank(self, corpus_dir):
        run(["train", "--variant", "dcgan", "--corpus", str(corpus_dir), "--epochs", "1",
             "--batch-size", "4"])
        checkpoint = corpus_dir.parent / "runs" / "dcgan" / "checkpoints" / "generator_final.pt"
        code = run(["generate", "--checkpoint", str(checkpoint), "--latent", "learned",
                    "--out", str(corpus_dir.parent / "s")])
        assert code == EXIT_DATA

    def test_malformed_log(self, fresh_config):
        log = fresh_config / "log.csv"
        log.write_text("epoch,metric_name,value\n1,loss_d,oops\n")
        assert run(["plot", "--log", str(log), "--out", str(fresh_config / "p")]) == EXIT_DATA


class TestExportMesh:
    """Test OBJ export."""

    def test_writes_obj(self, fresh_config, capsys, rng):
        image = save_heightmap(Heightmap(rng.integers(0, 256, (6, 5), dtype=np.uint8)), fresh_config / "h.png")
        out = fresh_config / "h.obj"
        assert run(["export-mesh", "--heightmap", str(image), "--out", str(out)]) == EXIT_OK
        assert "30 vertices, 40 faces" in capsys.readouterr().out
        lines = out.read_text().splitlines()
        assert sum(l.startswith("v ") for l in lines) == 30

    def test_one_pixel_image(self, fresh_config):
        image = save_heightmap(Heightmap(np.zeros((1, 1), dtype=np.uint8)), fresh_config / "px.png")
        code = run(["export-mesh", "--heightmap", str(image), "--out", str(fresh_config / "px.obj")])
        assert code == EXIT_DATA
