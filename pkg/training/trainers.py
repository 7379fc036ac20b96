"""Training loops for every model family."""

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Union

import numpy as np
import torch
from torch.utils.data import DataLoader
from tqdm import tqdm

from dataset.corpus import TileCorpus
from dataset.heightmap import NormRange, denormalize
from dataset.torch_dataset import TileDataset
from export.images import montage, save_heightmap
from models.builders import (
    ProgStage,
    build_dcgan_discriminator,
    build_dcgan_generator,
    build_prog_stage,
    build_wgan,
)
from models.latent import MOMENTS_NAME, LatentMode, LatentSource, save_moments
from models.network import SpecNetwork, transfer_weights
from models.specs import Activation, AlphaHandle
from models.vae import VAE
from utils.errors import CheckpointError, CorpusError, TrainingAbortedError
from utils.logging import get_logger
from .checkpoint import checkpoint_name, load_checkpoint, save_checkpoint
from .config import Architecture, OptimizerSpec, TrainConfig, Variant
from .log import TrainLog
from .losses import (
    clip_weights,
    discriminator_loss,
    generator_loss,
    vae_loss,
    wasserstein_losses,
)
from .noise import apply_instance_noise, noise_factor

logger = get_logger(__name__)

Corpus = Union[TileCorpus, np.ndarray]

LOG_NAME = "train_log.csv"
CHECKPOINT_DIR = "checkpoints"
SAMPLES_DIR = "samples"
PROG_STAGE_DIRS = ("stage_a_low", "stage_b_growth", "stage_c_high")


@dataclass
class TrainResult:
    """Logs (one per stage) and every checkpoint written."""
    logs: List[TrainLog]
    checkpoints: List[Path] = field(default_factory=list)
    out_dir: Optional[Path] = None

    @property
    def log(self) -> TrainLog:
        return self.logs[-1]

    def checkpoint(self, kind: str) -> Path:
        """Final checkpoint of the given kind."""
        for path in reversed(self.checkpoints):
            if path.name == f"{kind}_final.pt":
                return path
        raise CheckpointError(f"No final {kind} checkpoint in this run")


def seed_everything(seed: int, single_thread: bool = True) -> None:
    torch.manual_seed(seed)
    if single_thread:
        torch.set_num_threads(1)


def make_optimizer(spec: OptimizerSpec, params) -> torch.optim.Optimizer:
    if spec.name == "adam":
        return torch.optim.Adam(params, lr=spec.lr, betas=(spec.beta1, 0.999))
    return torch.optim.RMSprop(params, lr=spec.lr)


def _cycle(loader: DataLoader) -> Iterator[torch.Tensor]:
    # Reshuffles on every pass; itertools.cycle would replay the first order.
    while True:
        yield from loader


class BaseTrainer:
    """Seeding, data loading, checkpoint cadence and per-epoch records."""

    def __init__(self, config: TrainConfig, out_dir: Union[str, Path], stage: str = "",
                 norm_range: Optional[NormRange] = None, progress: bool = True):
        self.config = config
        self.out_dir = Path(out_dir)
        self.stage = stage
        self.norm_range = norm_range or config.norm_range
        self.device = torch.device(config.device)
        self.progress = progress
        self.log = TrainLog(name=stage or config.variant.value)
        self.checkpoints: List[Path] = []

        self.data_gen = torch.Generator().manual_seed(config.seed)
        self.noise_gen = torch.Generator().manual_seed(config.seed + 1)
        self.latent_gen = torch.Generator().manual_seed(config.seed + 2)
        self.sample_gen = torch.Generator().manual_seed(config.seed + 3)

    def make_dataset(self, corpus: Corpus, size: int) -> TileDataset:
        return TileDataset(corpus, self.norm_range, size)

    def make_loader(self, dataset: TileDataset, shuffle: bool = True) -> DataLoader:
        # Training batches stay full so batch norm never sees a single sample.
        return DataLoader(
            dataset,
            batch_size=self.config.batch_size,
            shuffle=shuffle,
            generator=self.data_gen if shuffle else None,
            drop_last=shuffle and len(dataset) > self.config.batch_size,
            num_workers=0,
        )

    def epochs_iter(self, epochs: int):
        return tqdm(range(1, epochs + 1), desc=self.log.name, unit="epoch",
                    leave=False, disable=not self.progress)

    def is_checkpoint_epoch(self, epoch: int, epochs: int) -> bool:
        return epoch == epochs or epoch % self.config.checkpoint_every == 0

    def record(self, epoch: int, started: float, values: Dict[str, float]) -> None:
        for name, value in values.items():
            if not math.isfinite(value):
                raise TrainingAbortedError(epoch, name, value, self.stage or None)
        self.log.append(epoch, time.perf_counter() - started, **values)
        summary = ", ".join(f"{k}={v:.4f}" for k, v in sorted(values.items()))
        logger.debug(f"[{self.log.name}] epoch {epoch}: {summary}")

    def save_network(self, kind: str, network: SpecNetwork, epoch: int, final: bool) -> Path:
        name = f"{kind}_final.pt" if final else checkpoint_name(kind, epoch)
        path = save_checkpoint(self.out_dir / CHECKPOINT_DIR / name, kind, network,
                               self.norm_range, epoch, {"seed": self.config.seed, "stage": self.stage})
        self.checkpoints.append(path)
        return path

    def save_samples(self, generator: SpecNetwork, z: torch.Tensor, epoch: int) -> Path:
        """Montage of generator outputs for a fixed latent batch."""
        was_training = generator.training
        generator.eval()
        with torch.no_grad():
            images = generator(z).cpu()
        generator.train(was_training)
        tiles = [denormalize(img, self.norm_range) for img in images]
        grid = montage(tiles, columns=max(1, math.ceil(math.sqrt(len(tiles)))))
        return save_heightmap(grid, self.out_dir / SAMPLES_DIR / f"e{epoch:05d}.png")

    def write_run_config(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(self.out_dir / "config.json", "w") as f:
            json.dump({**self.config.to_dict(), "stage": self.stage}, f, indent=2, sort_keys=True)

    def finish(self) -> TrainResult:
        self.log.save(self.out_dir / LOG_NAME)
        return TrainResult([self.log], list(self.checkpoints), self.out_dir)


class DCGANTrainer(BaseTrainer):
    """Binary cross-entropy GAN with optional discriminator hindering."""

    def __init__(self, config: TrainConfig, out_dir: Union[str, Path], progress: bool = True):
        super().__init__(config, out_dir, progress=progress)
        size = config.image_size
        self.generator = SpecNetwork(build_dcgan_generator(
            config.latent_dim, size, dropout=config.generator_dropout)).to(self.device)
        self.discriminator = SpecNetwork(build_dcgan_discriminator(
            size, dropout=config.hindering.dropout)).to(self.device)
        self.opt_g = make_optimizer(config.optimizer, self.generator.parameters())
        self.opt_d = make_optimizer(config.optimizer, self.discriminator.parameters())
        self.latent = LatentSource(LatentMode.STANDARD_NORMAL, config.latent_dim)
        self.fixed_z = self.latent.sample(config.sample_count, self.sample_gen, self.device)

    def _train_epoch(self, loader: DataLoader, factor: float) -> Dict[str, float]:
        bounds = self.norm_range.bounds
        real_target = 1.0 - self.config.hindering.label_smoothing_beta
        totals = {"loss_d": 0.0, "loss_g": 0.0}
        batches = 0
        for real in loader:
            real = real.to(self.device)
            z = self.latent.sample(real.shape[0], self.latent_gen, self.device)
            fake = self.generator(z)

            d_real = self.discriminator(apply_instance_noise(real, factor, self.noise_gen, bounds))
            d_fake = self.discriminator(apply_instance_noise(fake.detach(), factor, self.noise_gen, bounds))
            loss_d = discriminator_loss(d_real.view(-1), d_fake.view(-1), real_target)
            self.opt_d.zero_grad(set_to_none=True)
            loss_d.backward()
            self.opt_d.step()

            loss_g = generator_loss(self.discriminator(fake).view(-1))
            self.opt_g.zero_grad(set_to_none=True)
            loss_g.backward()
            self.opt_g.step()

            totals["loss_d"] += loss_d.item()
            totals["loss_g"] += loss_g.item()
            batches += 1
        return {k: v / batches for k, v in totals.items()}

    def train(self, corpus: Corpus) -> TrainResult:
        self.write_run_config()
        loader = self.make_loader(self.make_dataset(corpus, self.config.image_size))
        epochs = self.config.epochs
        schedule = self.config.hindering.instance_noise
        logger.info(f"Training DCGAN for {epochs} epochs on {len(loader.dataset)} tiles "
                    f"(noise {schedule.value}, beta {self.config.hindering.label_smoothing_beta})")

        self.generator.train()
        self.discriminator.train()
        for epoch in self.epochs_iter(epochs):
            started = time.perf_counter()
            factor = noise_factor(schedule, epoch, epochs)
            values = self._train_epoch(loader, factor)
            values["noise_factor"] = factor
            self.record(epoch, started, values)
            if self.is_checkpoint_epoch(epoch, epochs):
                final = epoch == epochs
                self.save_network("generator", self.generator, epoch, final)
                self.save_network("discriminator", self.discriminator, epoch, final)
                self.save_samples(self.generator, self.fixed_z, epoch)
        return self.finish()


class WGANTrainer(BaseTrainer):
    """
    Critic trained ``n_critic`` times per generator step, weights clipped
    after every critic update.

    Networks may be passed in (progressive stages, VAE decoder); otherwise
    they are built from ``config.architecture``. With ``alpha`` the fade-in
    weight rises linearly from 0 at the first epoch to 1 at the last.
    """

    def __init__(
        self,
        config: TrainConfig,
        out_dir: Union[str, Path],
        generator: Optional[SpecNetwork] = None,
        critic: Optional[SpecNetwork] = None,
        latent: Optional[LatentSource] = None,
        stage: str = "",
        image_size: Optional[int] = None,
        epochs: Optional[int] = None,
        alpha: Optional[AlphaHandle] = None,
        norm_range: Optional[NormRange] = None,
        progress: bool = True,
    ):
        super().__init__(config, out_dir, stage, norm_range, progress)
        self.image_size = image_size or config.image_size
        self.epochs = epochs or config.epochs
        self.alpha = alpha

        if generator is None or critic is None:
            if config.architecture == Architecture.PROG:
                generator = SpecNetwork(build_prog_stage(ProgStage.G128, base=self.image_size // 2,
                                                         latent_dim=config.latent_dim))
                critic = SpecNetwork(build_prog_stage(ProgStage.C128, base=self.image_size // 2))
            else:
                g_spec, c_spec = build_wgan(config.latent_dim, self.image_size,
                                            generator_dropout=config.generator_dropout)
                generator, critic = SpecNetwork(g_spec), SpecNetwork(c_spec)
        self.generator = generator.to(self.device)
        self.critic = critic.to(self.device)
        self.opt_g = make_optimizer(config.optimizer, self.generator.parameters())
        self.opt_c = make_optimizer(config.optimizer, self.critic.parameters())

        latent_dim = self.generator.spec.input_shape[0]
        self.latent = latent or LatentSource(LatentMode.STANDARD_NORMAL, latent_dim)
        self.fixed_z = self.latent.sample(config.sample_count, self.sample_gen, self.device)
        self.critic_updates = 0
        self.generator_updates = 0

    def _train_epoch(self, batches: Iterator[torch.Tensor], batches_per_epoch: int) -> Dict[str, float]:
        n_critic = self.config.n_critic
        gen_steps = max(1, batches_per_epoch // n_critic)
        real_sum = fake_sum = g_sum = 0.0

        for _ in range(gen_steps):
            for _ in range(n_critic):
                real = next(batches).to(self.device)
                z = self.latent.sample(real.shape[0], self.latent_gen, self.device)
                with torch.no_grad():
                    fake = self.generator(z)
                losses = wasserstein_losses(self.critic(real), self.critic(fake))
                self.opt_c.zero_grad(set_to_none=True)
                losses.critic_loss.backward()
                self.opt_c.step()
                clip_weights(self.critic, self.config.clip_c)
                self.critic_updates += 1
                real_sum += losses.estimate_real.item()
                fake_sum += losses.estimate_fake.item()

            z = self.latent.sample(self.config.batch_size, self.latent_gen, self.device)
            scores = self.critic(self.generator(z)).view(-1)
            loss_g = -scores.mean()
            self.opt_g.zero_grad(set_to_none=True)
            loss_g.backward()
            self.opt_g.step()
            self.generator_updates += 1
            g_sum += scores.mean().item()

        critic_steps = gen_steps * n_critic
        west_real = real_sum / critic_steps
        west_fake = fake_sum / critic_steps
        return {
            "west_real": west_real,
            "west_fake": west_fake,
            "west_gap": west_real - west_fake,
            "west_g": g_sum / gen_steps,
        }

    def train(self, corpus: Corpus) -> TrainResult:
        self.write_run_config()
        loader = self.make_loader(self.make_dataset(corpus, self.image_size))
        batches = _cycle(loader)
        logger.info(f"Training WGAN [{self.log.name}] for {self.epochs} epochs at "
                    f"{self.image_size}x{self.image_size}, n_critic={self.config.n_critic}, "
                    f"c={self.config.clip_c}")

        self.generator.train()
        self.critic.train()
        for epoch in self.epochs_iter(self.epochs):
            started = time.perf_counter()
            if self.alpha is not None:
                self.alpha.set((epoch - 1) / (self.epochs - 1) if self.epochs > 1 else 1.0)
            values = self._train_epoch(batches, len(loader))
            if self.alpha is not None:
                values["alpha"] = self.alpha.value
            self.record(epoch, started, values)
            if self.is_checkpoint_epoch(epoch, self.epochs):
                final = epoch == self.epochs
                self.save_network("generator", self.generator, epoch, final)
                self.save_network("critic", self.critic, epoch, final)
                self.save_samples(self.generator, self.fixed_z, epoch)
        return self.finish()


class VAETrainer(BaseTrainer):
    """
    Standalone VAE training followed by capture of the encoder moments.

    In ``feature`` reconstruction mode a discriminator is co-trained and the
    reconstruction term compares its hidden activations for x and x_hat.
    """

    def __init__(self, config: TrainConfig, out_dir: Union[str, Path], progress: bool = True):
        super().__init__(config, out_dir, norm_range=NormRange.UNIT, progress=progress)
        self.vae = VAE(config.latent_dim, config.image_size,
                       decoder_dropout=config.generator_dropout).to(self.device)
        self.opt = make_optimizer(config.optimizer, self.vae.parameters())
        self.fixed_z = torch.randn((config.sample_count, config.latent_dim),
                                   generator=self.sample_gen).to(self.device)

        self.discriminator: Optional[SpecNetwork] = None
        if config.vae_reconstruction == "feature":
            spec = build_dcgan_discriminator(config.image_size)
            self.discriminator = SpecNetwork(spec).to(self.device)
            self.opt_d = make_optimizer(config.optimizer, self.discriminator.parameters())
            names = [layer.name for layer in spec.layers]
            self.feature_layer = names[names.index("flatten") - 1]

    def _reconstruction_features(self, x: torch.Tensor, x_hat: torch.Tensor):
        _, real = self.discriminator.forward_with_features(x, [self.feature_layer])
        _, fake = self.discriminator.forward_with_features(x_hat, [self.feature_layer])
        return real[self.feature_layer].detach(), fake[self.feature_layer]

    def _train_epoch(self, loader: DataLoader) -> Dict[str, float]:
        totals = {"vae_loss": 0.0, "vae_reconstruction": 0.0, "vae_kl": 0.0}
        if self.discriminator is not None:
            totals["loss_d"] = 0.0
        batches = 0
        for x in loader:
            x = x.to(self.device)
            x_hat, mu, sigma = self.vae(x, generator=self.latent_gen)
            features = None
            if self.discriminator is not None:
                features = self._reconstruction_features(x, x_hat)
            loss = vae_loss(x, x_hat, mu, sigma, features=features)
            self.opt.zero_grad(set_to_none=True)
            loss.total.backward()
            self.opt.step()

            if self.discriminator is not None:
                loss_d = discriminator_loss(self.discriminator(x).view(-1),
                                            self.discriminator(x_hat.detach()).view(-1))
                self.opt_d.zero_grad(set_to_none=True)
                loss_d.backward()
                self.opt_d.step()
                totals["loss_d"] += loss_d.item()

            totals["vae_loss"] += loss.total.item()
            totals["vae_reconstruction"] += loss.reconstruction.item()
            totals["vae_kl"] += loss.kl.item()
            batches += 1
        return {k: v / batches for k, v in totals.items()}

    @torch.no_grad()
    def capture_moments(self, dataset: TileDataset) -> Path:
        """Encode every tile in corpus order and store the (mu, sigma) bank."""
        self.vae.eval()
        mus, sigmas = [], []
        for x in self.make_loader(dataset, shuffle=False):
            mu, sigma = self.vae.encode(x.to(self.device))
            mus.append(mu.cpu())
            sigmas.append(sigma.cpu())
        self.vae.train()
        path = save_moments(torch.cat(mus), torch.cat(sigmas), self.out_dir / MOMENTS_NAME)
        self.checkpoints.append(path)
        return path

    def train(self, corpus: Corpus) -> TrainResult:
        self.write_run_config()
        dataset = self.make_dataset(corpus, self.config.image_size)
        if len(dataset) < 2:
            raise CorpusError(f"VAE training needs at least 2 tiles for the encoder batch norm, "
                              f"got {len(dataset)}")
        loader = self.make_loader(dataset)
        epochs = self.config.epochs
        logger.info(f"Training VAE for {epochs} epochs on {len(dataset)} tiles "
                    f"({self.config.vae_reconstruction} reconstruction)")

        self.vae.train()
        for epoch in self.epochs_iter(epochs):
            started = time.perf_counter()
            self.record(epoch, started, self._train_epoch(loader))
            if self.is_checkpoint_epoch(epoch, epochs):
                final = epoch == epochs
                self.save_network("encoder", self.vae.encoder, epoch, final)
                self.save_network("decoder", self.vae.decoder, epoch, final)
                self.save_samples(self.vae.decoder, self.fixed_z, epoch)
        self.capture_moments(dataset)
        return self.finish()


def train_dcgan(corpus: Corpus, config: TrainConfig, out_dir: Union[str, Path],
                progress: bool = True) -> TrainResult:
    """Train a DCGAN; writes checkpoints, samples and the TrainLog under ``out_dir``."""
    if config.variant != Variant.DCGAN:
        raise ValueError(f"train_dcgan needs variant dcgan, got {config.variant.value}")
    seed_everything(config.seed)
    return DCGANTrainer(config, out_dir, progress).train(corpus)


def train_wgan(corpus: Corpus, config: TrainConfig, out_dir: Union[str, Path],
               progress: bool = True) -> TrainResult:
    """Train a weight-clipped WGAN with the configured architecture."""
    if config.variant != Variant.WGAN:
        raise ValueError(f"train_wgan needs variant wgan, got {config.variant.value}")
    seed_everything(config.seed)
    return WGANTrainer(config, out_dir, progress=progress).train(corpus)


def train_proggan(corpus: Corpus, config: TrainConfig, out_dir: Union[str, Path],
                  progress: bool = True) -> TrainResult:
    """
    Low-resolution networks, then the growth networks, then the
    high-resolution networks, each trained as a WGAN. Every stage starts
    from the previous stage's weights wherever layer names and shapes match.
    """
    if config.variant != Variant.PROGGAN:
        raise ValueError(f"train_proggan needs variant proggan, got {config.variant.value}")
    seed_everything(config.seed)
    out_dir = Path(out_dir)
    base = config.image_size // 2
    alpha = AlphaHandle(0.0)
    stages = (
        (ProgStage.G64, ProgStage.C64, base, None),
        (ProgStage.G_GROWTH, ProgStage.C_GROWTH, 2 * base, alpha),
        (ProgStage.G128, ProgStage.C128, 2 * base, None),
    )

    logs, checkpoints = [], []
    previous = None
    for (g_stage, c_stage, size, handle), epochs, stage_dir in zip(stages, config.stage_epochs, PROG_STAGE_DIRS):
        generator = SpecNetwork(build_prog_stage(g_stage, handle, base, config.latent_dim))
        critic = SpecNetwork(build_prog_stage(c_stage, handle, base))
        if previous is not None:
            moved = transfer_weights(previous.generator, generator) + transfer_weights(previous.critic, critic)
            logger.info(f"{stage_dir}: carried over {len(moved)} tensors")
        trainer = WGANTrainer(config, out_dir / stage_dir, generator, critic, stage=stage_dir,
                              image_size=size, epochs=epochs, alpha=handle, progress=progress)
        result = trainer.train(corpus)
        logs.extend(result.logs)
        checkpoints.extend(result.checkpoints)
        previous = trainer
    return TrainResult(logs, checkpoints, out_dir)


def train_vae(corpus: Corpus, config: TrainConfig, out_dir: Union[str, Path],
              progress: bool = True) -> TrainResult:
    """Train the VAE on [0,1] tiles and capture the moment bank."""
    if config.variant != Variant.VAE:
        raise ValueError(f"train_vae needs variant vae, got {config.variant.value}")
    seed_everything(config.seed)
    return VAETrainer(config, out_dir, progress).train(corpus)


def train_vae_wgan(
    corpus: Corpus,
    config: TrainConfig,
    decoder_checkpoint: Union[str, Path],
    out_dir: Union[str, Path],
    moments: Optional[Union[str, Path]] = None,
    progress: bool = True,
) -> TrainResult:
    """
    WGAN whose generator starts as a trained VAE decoder.

    Args:
        corpus: Tiles
        config: vae_wgan config
        decoder_checkpoint: Decoder saved by ``train_vae``
        out_dir: Output directory
        moments: Moment bank for learned latents; defaults to the one next to the checkpoint dir
        progress: Show a progress bar

    Raises:
        CheckpointError: Missing checkpoint or latent width mismatch
    """
    if config.variant != Variant.VAE_WGAN:
        raise ValueError(f"train_vae_wgan needs variant vae_wgan, got {config.variant.value}")
    seed_everything(config.seed)
    decoder, meta = load_checkpoint(decoder_checkpoint, config.device)
    latent_dim = decoder.spec.input_shape[0]
    if latent_dim != config.latent_dim:
        raise CheckpointError(
            f"Decoder {decoder_checkpoint} takes {latent_dim}-wide latents, config asks for {config.latent_dim}"
        )
    size = decoder.spec.output_shape[1]

    if config.latent == LatentMode.LEARNED_MOMENTS:
        bank = Path(moments) if moments else Path(decoder_checkpoint).parent.parent / MOMENTS_NAME
        latent = LatentSource.from_bank(bank, latent_dim)
    else:
        latent = LatentSource(LatentMode.STANDARD_NORMAL, latent_dim)

    critic = SpecNetwork(build_dcgan_discriminator(size, out_activation=Activation.LINEAR, name="critic"))
    trainer = WGANTrainer(config, out_dir, decoder, critic, latent, image_size=size,
                          norm_range=meta["norm_range"], progress=progress)
    return trainer.train(corpus)


def run_training(
    corpus: Corpus,
    config: TrainConfig,
    out_dir: Union[str, Path],
    decoder_checkpoint: Optional[Union[str, Path]] = None,
    progress: bool = True,
) -> TrainResult:
    """
    Dispatch on ``config.variant``.

    vae_wgan without a decoder checkpoint first trains a VAE for
    ``vae_epochs`` under ``out_dir/vae`` and then the WGAN under ``out_dir/wgan``.
    """
    out_dir = Path(out_dir)
    variant = config.variant
    if variant == Variant.DCGAN:
        return train_dcgan(corpus, config, out_dir, progress)
    if variant == Variant.WGAN:
        return train_wgan(corpus, config, out_dir, progress)
    if variant == Variant.PROGGAN:
        return train_proggan(corpus, config, out_dir, progress)
    if variant == Variant.VAE:
        return train_vae(corpus, config, out_dir, progress)

    if decoder_checkpoint is not None:
        return train_vae_wgan(corpus, config, decoder_checkpoint, out_dir, progress=progress)
    if config.vae_epochs < 1:
        raise CheckpointError("vae_wgan needs a decoder checkpoint or vae_epochs > 0")
    vae_config = replace(config, variant=Variant.VAE, epochs=config.vae_epochs,
                         optimizer=config.vae_optimizer, latent=LatentMode.STANDARD_NORMAL)
    vae_result = train_vae(corpus, vae_config, out_dir / "vae", progress)
    wgan_result = train_vae_wgan(corpus, config, vae_result.checkpoint("decoder"),
                                 out_dir / "wgan", progress=progress)
    return TrainResult(vae_result.logs + wgan_result.logs,
                       vae_result.checkpoints + wgan_result.checkpoints, out_dir)
