"""Training configuration."""

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from dataset.heightmap import NormRange
from models.builders import GAN_LATENT_DIM, VAE_LATENT_DIM
from models.latent import LatentMode

# Clip constants tried when picking c for the critic; 0.1 is the default.
CLIP_CANDIDATES = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2)


class Variant(str, Enum):
    DCGAN = "dcgan"
    WGAN = "wgan"
    PROGGAN = "proggan"
    VAE = "vae"
    VAE_WGAN = "vae_wgan"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise ValueError(f"Unknown variant {value!r}; expected one of {[v.value for v in cls]}")

    @property
    def norm_range(self) -> NormRange:
        """Input range of the model family: tanh nets see [-1,1], sigmoid nets [0,1]."""
        if self in (Variant.VAE, Variant.VAE_WGAN):
            return NormRange.UNIT
        return NormRange.SIGNED

    @property
    def default_latent_dim(self) -> int:
        if self in (Variant.VAE, Variant.VAE_WGAN):
            return VAE_LATENT_DIM
        return GAN_LATENT_DIM


class Architecture(str, Enum):
    """Generator/critic topology used by the plain WGAN trainer."""
    DCGAN = "dcgan"
    PROG = "prog"


class NoiseSchedule(str, Enum):
    NONE = "none"
    LINEAR = "1"
    REPAIRED = "2"
    LITERAL = "2-literal"
    TRIANGLE = "3"

    @classmethod
    def parse(cls, value) -> "NoiseSchedule":
        if isinstance(value, cls):
            return value
        if value is None or value is False:
            return cls.NONE
        try:
            return cls(str(value))
        except ValueError:
            raise ValueError(f"Unknown noise schedule {value!r}; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class OptimizerSpec:
    name: str
    lr: float
    beta1: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("adam", "rmsprop"):
            raise ValueError(f"Unknown optimizer {self.name!r}")
        if self.lr <= 0:
            raise ValueError(f"Learning rate must be > 0, got {self.lr}")
        if self.name == "adam" and self.beta1 is None:
            object.__setattr__(self, "beta1", 0.5)

    @classmethod
    def adam(cls, lr: float = 0.0002, beta1: float = 0.5) -> "OptimizerSpec":
        return cls("adam", lr, beta1)

    @classmethod
    def rmsprop(cls, lr: float = 0.0005) -> "OptimizerSpec":
        return cls("rmsprop", lr)

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, "lr": self.lr}
        if self.beta1 is not None:
            data["beta1"] = self.beta1
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OptimizerSpec":
        return cls(str(data["name"]).lower(), float(data["lr"]),
                   None if data.get("beta1") is None else float(data["beta1"]))


DEFAULT_OPTIMIZERS = {
    Variant.DCGAN: OptimizerSpec.adam(0.0002, 0.5),
    Variant.WGAN: OptimizerSpec.rmsprop(0.0005),
    Variant.PROGGAN: OptimizerSpec.rmsprop(0.0005),
    Variant.VAE: OptimizerSpec.rmsprop(0.0003),
    Variant.VAE_WGAN: OptimizerSpec.rmsprop(0.0005),
}


@dataclass(frozen=True)
class HinderingConfig:
    """Discriminator hindering: instance noise, one-sided label smoothing, dropout on D."""
    instance_noise: NoiseSchedule = NoiseSchedule.NONE
    label_smoothing_beta: float = 0.0
    dropout: bool = False

    def __post_init__(self):
        object.__setattr__(self, "instance_noise", NoiseSchedule.parse(self.instance_noise))
        if not 0.0 <= self.label_smoothing_beta < 1.0:
            raise ValueError(f"label_smoothing_beta must be in [0, 1), got {self.label_smoothing_beta}")

    @property
    def enabled(self) -> bool:
        return (self.instance_noise != NoiseSchedule.NONE
                or self.label_smoothing_beta > 0 or self.dropout)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instance_noise": self.instance_noise.value,
            "label_smoothing_beta": self.label_smoothing_beta,
            "dropout": self.dropout,
        }


@dataclass(frozen=True)
class TrainConfig:
    """
    Everything a training run needs besides the corpus.

    ``epochs`` is the main phase length. For vae_wgan, ``vae_epochs`` is the
    length of the VAE phase that precedes it; for proggan, ``stage_epochs``
    holds the three stage lengths.
    """
    variant: Variant
    epochs: int
    batch_size: int = 64
    optimizer: Optional[OptimizerSpec] = None
    vae_optimizer: OptimizerSpec = field(default_factory=lambda: DEFAULT_OPTIMIZERS[Variant.VAE])
    hindering: HinderingConfig = field(default_factory=HinderingConfig)
    clip_c: float = 0.1
    n_critic: int = 5
    latent: LatentMode = LatentMode.STANDARD_NORMAL
    latent_dim: Optional[int] = None
    seed: int = 0
    stage_epochs: Tuple[int, ...] = ()
    vae_epochs: int = 0
    architecture: Architecture = Architecture.DCGAN
    image_size: int = 128
    generator_dropout: bool = True
    vae_reconstruction: str = "pixel"
    checkpoint_every: int = 50
    sample_count: int = 16
    device: str = "cpu"
    name: str = ""

    def __post_init__(self):
        def set_(name, value):
            object.__setattr__(self, name, value)

        set_("variant", Variant.parse(self.variant))
        set_("architecture", Architecture(self.architecture))
        set_("latent", LatentMode.parse(self.latent))
        set_("stage_epochs", tuple(int(e) for e in self.stage_epochs))
        if self.optimizer is None:
            set_("optimizer", DEFAULT_OPTIMIZERS[self.variant])
        if self.latent_dim is None:
            set_("latent_dim", self.variant.default_latent_dim)

        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.variant in (Variant.VAE, Variant.VAE_WGAN) and self.batch_size < 2:
            raise ValueError(f"{self.variant.value} needs batch_size >= 2 for the encoder batch norm, "
                             f"got {self.batch_size}")
        if self.clip_c <= 0:
            raise ValueError(f"clip_c must be > 0, got {self.clip_c}")
        if self.n_critic < 1:
            raise ValueError(f"n_critic must be >= 1, got {self.n_critic}")
        if self.checkpoint_every < 1:
            raise ValueError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if self.vae_epochs < 0:
            raise ValueError(f"vae_epochs must be >= 0, got {self.vae_epochs}")
        if self.variant == Variant.PROGGAN:
            if len(self.stage_epochs) != 3 or min(self.stage_epochs) < 1:
                raise ValueError(f"proggan needs three positive stage_epochs, got {self.stage_epochs}")
            if self.image_size % 2:
                raise ValueError(f"proggan image_size must be even, got {self.image_size}")
        if self.vae_reconstruction not in ("pixel", "feature"):
            raise ValueError(f"vae_reconstruction must be 'pixel' or 'feature', got {self.vae_reconstruction!r}")
        if self.latent == LatentMode.LEARNED_MOMENTS and self.variant != Variant.VAE_WGAN:
            raise ValueError("learned_moments latent is only available for vae_wgan")

    @property
    def norm_range(self) -> NormRange:
        return self.variant.norm_range

    def with_overrides(self, **overrides) -> "TrainConfig":
        """Copy with non-None overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, (OptimizerSpec, HinderingConfig)):
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        """Build from a preset/YAML mapping; unknown keys are rejected."""
        data = dict(data)
        data.pop("description", None)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"Unknown training config keys: {unknown}")
        if isinstance(data.get("optimizer"), dict):
            data["optimizer"] = OptimizerSpec.from_dict(data["optimizer"])
        if isinstance(data.get("vae_optimizer"), dict):
            data["vae_optimizer"] = OptimizerSpec.from_dict(data["vae_optimizer"])
        if isinstance(data.get("hindering"), dict):
            data["hindering"] = HinderingConfig(**data["hindering"])
        if "variant" not in data or "epochs" not in data:
            raise ValueError("Training config needs 'variant' and 'epochs'")
        return cls(**data)
