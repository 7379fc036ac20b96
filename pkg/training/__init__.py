from .config import (
    CLIP_CANDIDATES,
    DEFAULT_OPTIMIZERS,
    Architecture,
    HinderingConfig,
    NoiseSchedule,
    OptimizerSpec,
    TrainConfig,
    Variant,
)
from .log import EpochRecord, TrainLog, timing_path
from .noise import noise_factor, apply_instance_noise
from .losses import (
    VAELoss,
    WassersteinLosses,
    clip_weights,
    discriminator_loss,
    generator_loss,
    kl_divergence,
    vae_loss,
    wasserstein_losses,
)
from .checkpoint import save_checkpoint, load_checkpoint
from .trainers import (
    DCGANTrainer,
    TrainResult,
    VAETrainer,
    WGANTrainer,
    run_training,
    train_dcgan,
    train_proggan,
    train_vae,
    train_vae_wgan,
    train_wgan,
)
from .generate import generate, write_samples
