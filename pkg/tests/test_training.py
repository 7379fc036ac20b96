"""Tests for training configuration, schedules, losses, logs and checkpoints."""

import json
import warnings
from pathlib import Path

import numpy as np
import pytest
import torch

from config import PRESET_NAMES, load_preset
from dataset import NormRange
from models import (
    AlphaHandle,
    LatentSource,
    ProgStage,
    SpecNetwork,
    build_dcgan_discriminator,
    build_dcgan_generator,
    build_prog_stage,
)
from models.specs import Activation
from training import (
    CLIP_CANDIDATES,
    HinderingConfig,
    NoiseSchedule,
    OptimizerSpec,
    TrainConfig,
    TrainLog,
    Variant,
    apply_instance_noise,
    clip_weights,
    discriminator_loss,
    generate,
    kl_divergence,
    load_checkpoint,
    noise_factor,
    save_checkpoint,
    timing_path,
    vae_loss,
    wasserstein_losses,
    write_samples,
)
from utils.errors import CheckpointError

GOLDEN_DIR = Path(__file__).parent / "golden"


class TestPresets:
    """Experiment presets parse to the documented configurations."""

    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_golden_config(self, name):
        config = TrainConfig.from_dict(load_preset(name))
        expected = json.loads((GOLDEN_DIR / "presets" / f"{name}.json").read_text())
        assert config.to_dict() == expected

    def test_hindering_presets(self):
        e2 = TrainConfig.from_dict(load_preset("e2"))
        assert e2.hindering.instance_noise == NoiseSchedule.LINEAR
        assert e2.hindering.label_smoothing_beta == 0.2
        assert e2.hindering.dropout
        assert not TrainConfig.from_dict(load_preset("e1")).hindering.enabled

    def test_wgan_and_progressive_presets(self):
        e5 = TrainConfig.from_dict(load_preset("E5"))
        assert (e5.variant, e5.epochs, e5.clip_c, e5.n_critic) == (Variant.WGAN, 5000, 0.1, 5)
        assert TrainConfig.from_dict(load_preset("e7")).stage_epochs == (1650, 1650, 1650)

    def test_vae_presets(self):
        e9 = TrainConfig.from_dict(load_preset("e9"))
        e10 = TrainConfig.from_dict(load_preset("e10"))
        assert (e9.vae_epochs, e9.epochs) == (150, 1000)
        assert e9.vae_optimizer == OptimizerSpec.rmsprop(0.0003)
        assert e10.latent.value == "learned_moments"
        assert e9.norm_range == NormRange.UNIT

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            load_preset("e12")


class TestTrainConfig:
    """Test validation and overrides."""

    def test_variant_defaults(self):
        dcgan = TrainConfig("dcgan", epochs=10)
        assert dcgan.optimizer == OptimizerSpec.adam(0.0002, 0.5)
        assert dcgan.latent_dim == 100
        vae = TrainConfig("vae-wgan", epochs=10)
        assert vae.variant == Variant.VAE_WGAN
        assert vae.latent_dim == 512

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="Unknown training config keys"):
            TrainConfig.from_dict({"variant": "wgan", "epochs": 1, "learning_rate": 1})

    def test_learned_latent_needs_vae_wgan(self):
        with pytest.raises(ValueError):
            TrainConfig("wgan", epochs=1, latent="learned_moments")

    def test_proggan_needs_three_stages(self):
        with pytest.raises(ValueError):
            TrainConfig("proggan", epochs=10, stage_epochs=(5, 5))

    @pytest.mark.parametrize("variant", ["vae", "vae_wgan"])
    def test_vae_needs_batches_of_two(self, variant):
        with pytest.raises(ValueError, match="batch_size >= 2"):
            TrainConfig(variant, epochs=1, batch_size=1)
        assert TrainConfig("dcgan", epochs=1, batch_size=1).batch_size == 1

    @pytest.mark.parametrize("field,value", [("epochs", 0), ("clip_c", 0.0), ("n_critic", 0)])
    def test_ranges(self, field, value):
        data = {"variant": "wgan", "epochs": 5, field: value}
        with pytest.raises(ValueError):
            TrainConfig.from_dict(data)

    def test_overrides_skip_none(self):
        config = TrainConfig("wgan", epochs=5, seed=3).with_overrides(seed=None, epochs=7)
        assert (config.seed, config.epochs) == (3, 7)

    def test_clip_candidates(self):
        assert 0.1 in CLIP_CANDIDATES
        assert list(CLIP_CANDIDATES) == sorted(CLIP_CANDIDATES)

    def test_unknown_noise_schedule(self):
        with pytest.raises(ValueError):
            HinderingConfig(instance_noise="4")


class TestNoiseSchedules:
    """Instance-noise factor schedules."""

    def test_none_is_zero(self):
        assert noise_factor("none", 3, 10) == 0.0

    def test_linear_endpoints(self):
        assert noise_factor("1", 0, 200) == 0.0
        assert noise_factor("1", 200, 200) == 0.5

    def test_triangle_shape(self):
        epochs, half = 200, 100
        assert noise_factor("3", half, epochs) == pytest.approx(0.5, abs=1e-12)
        assert noise_factor("3", epochs, epochs) == pytest.approx(0.0, abs=1e-12)
        for k in range(half + 1):
            assert noise_factor("3", half - k, epochs) == pytest.approx(
                noise_factor("3", half + k, epochs), abs=1e-12)

    def test_repaired_follows_half_descent(self):
        epochs = 200
        for e in range(epochs + 1):
            triangle = noise_factor("3", e, epochs)
            expected = triangle if e <= 100 else triangle / 2
            assert noise_factor("2", e, epochs) == pytest.approx(expected, abs=1e-12)

    def test_literal_variant_warns_and_drops_to_zero(self):
        with pytest.warns(DeprecationWarning):
            assert noise_factor("2-literal", 150, 200) == 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert noise_factor("2-literal", 50, 200) == pytest.approx(0.25)

    def test_epoch_out_of_range(self):
        with pytest.raises(ValueError):
            noise_factor("1", 11, 10)

    def test_too_few_epochs(self):
        with pytest.raises(ValueError):
            noise_factor("3", 1, 1)

    def test_apply_noise_is_clamped_and_seeded(self):
        batch = torch.zeros(4, 1, 8, 8)
        a = apply_instance_noise(batch, 0.5, torch.Generator().manual_seed(1))
        b = apply_instance_noise(batch, 0.5, torch.Generator().manual_seed(1))
        assert torch.equal(a, b)
        assert a.abs().max() <= 1
        assert apply_instance_noise(batch, 0.0) is batch

    def test_apply_noise_statistics(self):
        out = apply_instance_noise(torch.zeros(1, 1, 1000, 1000), 0.1, torch.Generator().manual_seed(0))
        assert abs(out.mean().item()) < 1e-3
        assert abs(out.std().item() - 0.1) < 0.005


class TestWassersteinLosses:
    """Critic/generator objectives and weight clipping."""

    def test_identities(self):
        gen = torch.Generator().manual_seed(0)
        for _ in range(100):
            real = torch.randn(32, generator=gen, dtype=torch.float64)
            fake = torch.randn(32, generator=gen, dtype=torch.float64)
            losses = wasserstein_losses(real, fake)
            assert abs(losses.critic_loss + losses.gap) < 1e-9
            assert abs(losses.generator_loss + fake.mean()) < 1e-9
            assert abs(losses.gap - (real.mean() - fake.mean())) < 1e-9

    def test_gradient_matches_finite_differences(self):
        gen = torch.Generator().manual_seed(1)
        real = torch.randn(16, 6, generator=gen, dtype=torch.float64)
        fake = torch.randn(16, 6, generator=gen, dtype=torch.float64)
        w = torch.randn(6, generator=gen, dtype=torch.float64, requires_grad=True)

        def loss(weights):
            return wasserstein_losses(real @ weights, fake @ weights).critic_loss

        loss(w).backward()
        h = 1e-6
        numeric = torch.zeros(6, dtype=torch.float64)
        with torch.no_grad():
            for i in range(6):
                step = torch.zeros(6, dtype=torch.float64)
                step[i] = h
                numeric[i] = (loss(w + step) - loss(w - step)) / (2 * h)
        rel = (w.grad - numeric).norm() / numeric.norm()
        assert rel < 1e-5

    def test_clip_bounds_and_idempotence(self):
        critic = SpecNetwork(build_dcgan_discriminator(32, out_activation=Activation.LINEAR))
        opt = torch.optim.RMSprop(critic.parameters(), lr=0.0005)
        losses = wasserstein_losses(critic(torch.rand(4, 1, 32, 32)), critic(torch.rand(4, 1, 32, 32)))
        losses.critic_loss.backward()
        opt.step()
        clip_weights(critic, 0.1)
        assert max(p.abs().max().item() for p in critic.parameters()) <= 0.1
        before = [p.detach().clone() for p in critic.parameters()]
        clip_weights(critic, 0.1)
        assert all(torch.equal(a, b) for a, b in zip(before, critic.parameters()))

    def test_empty_scores(self):
        with pytest.raises(ValueError):
            wasserstein_losses(torch.zeros(0), torch.zeros(3))


class TestBCELosses:
    """Binary cross-entropy objectives."""

    def test_undecided_discriminator(self):
        half = torch.full((8,), 0.5)
        assert discriminator_loss(half, half).item() == pytest.approx(np.log(2), abs=1e-6)

    def test_label_smoothing_changes_real_target(self):
        d_real = torch.full((4,), 0.8)
        d_fake = torch.zeros(4)
        entropy = -(0.8 * np.log(0.8) + 0.2 * np.log(0.2))
        assert discriminator_loss(d_real, d_fake, 0.8).item() == pytest.approx(0.5 * entropy, abs=1e-6)


class TestVAELoss:
    """KL and reconstruction terms."""

    def test_kl_zero_at_prior(self):
        assert kl_divergence(torch.zeros(3, 8), torch.ones(3, 8)).item() == pytest.approx(0.0, abs=1e-7)

    def test_kl_non_negative(self):
        gen = torch.Generator().manual_seed(0)
        for _ in range(50):
            mu = torch.randn(4, 8, generator=gen)
            sigma = torch.rand(4, 8, generator=gen) * 3 + 0.01
            assert kl_divergence(mu, sigma).item() >= -1e-6

    def test_uniform_half_reconstruction(self):
        x = torch.tensor([[[[0.0, 1.0], [1.0, 0.0]]]])
        x_hat = torch.full_like(x, 0.5)
        loss = vae_loss(x, x_hat, torch.zeros(1, 4), torch.ones(1, 4))
        assert loss.reconstruction.item() == pytest.approx(4 * np.log(2), abs=1e-6)
        assert loss.total.item() == pytest.approx(loss.reconstruction.item() + loss.kl.item())

    def test_feature_reconstruction(self):
        x = torch.rand(2, 1, 4, 4)
        features = (torch.ones(2, 3), torch.zeros(2, 3))
        loss = vae_loss(x, x, torch.zeros(2, 4), torch.ones(2, 4), features=features)
        assert loss.reconstruction.item() == pytest.approx(0.5 * 6 / 2)

    def test_out_of_range_input(self):
        with pytest.raises(ValueError):
            vae_loss(torch.full((1, 1, 2, 2), 2.0), torch.full((1, 1, 2, 2), 0.5),
                     torch.zeros(1, 2), torch.ones(1, 2))


class TestTrainLog:
    """Per-epoch records and their CSV form."""

    def test_epochs_must_increase(self):
        log = TrainLog()
        log.append(1, loss_d=0.5)
        with pytest.raises(ValueError):
            log.append(1, loss_d=0.4)

    def test_csv_layout(self, tmp_path):
        log = TrainLog()
        log.append(1, seconds=2.0, loss_g=1.5, loss_d=0.25)
        log.append(2, seconds=3.0, loss_g=1.25, loss_d=0.125)
        path = log.save(tmp_path / "train_log.csv")
        assert path.read_text() == (
            "epoch,metric_name,value\n"
            "1,loss_d,0.25\n1,loss_g,1.5\n"
            "2,loss_d,0.125\n2,loss_g,1.25\n"
        )
        assert timing_path(path).read_text() == "epoch,seconds\n1,2.0\n2,3.0\n"
        assert log.metrics == ["loss_d", "loss_g"]
        assert log.last("loss_g") == 1.25


class TestCheckpoints:
    """Checkpoint save/load and sampling."""

    def setup_method(self):
        torch.manual_seed(0)
        self.generator = SpecNetwork(build_dcgan_generator(latent_dim=8, out=32)).eval()

    def test_round_trip(self, tmp_path):
        path = save_checkpoint(tmp_path / "g.pt", "generator", self.generator, NormRange.SIGNED, 3)
        network, meta = load_checkpoint(path)
        z = torch.randn(2, 8)
        with torch.no_grad():
            assert torch.equal(network(z), self.generator(z))
        assert meta["epoch"] == 3
        assert meta["norm_range"] == NormRange.SIGNED

    def test_alpha_survives(self, tmp_path):
        growth = SpecNetwork(build_prog_stage(ProgStage.G_GROWTH, AlphaHandle(0.4), base=16))
        network, _ = load_checkpoint(save_checkpoint(tmp_path / "g.pt", "generator", growth, "signed", 1))
        assert network.alpha.value == pytest.approx(0.4)

    def test_missing_and_corrupt(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "missing.pt")
        (tmp_path / "bad.pt").write_bytes(b"garbage")
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "bad.pt")

    def test_generate_is_seeded(self, tmp_path):
        path = save_checkpoint(tmp_path / "g.pt", "generator", self.generator, NormRange.SIGNED, 1)
        a = generate(path, n=3, seed=5)
        b = generate(path, n=3, seed=5)
        assert len(a) == 3
        assert all(x == y for x, y in zip(a, b))
        assert a[0].shape == (32, 32)

    def test_generate_edge_cases(self, tmp_path):
        path = save_checkpoint(tmp_path / "g.pt", "generator", self.generator, NormRange.SIGNED, 1)
        assert generate(path, n=0) == []
        with pytest.raises(ValueError):
            generate(path, n=-1)
        with pytest.raises(CheckpointError):
            generate(path, latent=LatentSource(dim=100), n=1)

    def test_write_samples(self, tmp_path):
        path = save_checkpoint(tmp_path / "g.pt", "generator", self.generator, NormRange.SIGNED, 1)
        paths = write_samples(generate(path, n=4), tmp_path / "out")
        assert [p.name for p in paths] == [
            "sample_000.png", "sample_001.png", "sample_002.png", "sample_003.png", "montage.png"]
