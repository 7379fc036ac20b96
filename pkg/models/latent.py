"""Latent vector sources for generators."""

from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import torch

from utils.errors import CheckpointError, ModelSpecError
from utils.logging import get_logger

logger = get_logger(__name__)

MOMENTS_NAME = "moments.pt"


class LatentMode(str, Enum):
    STANDARD_NORMAL = "standard_normal"
    LEARNED_MOMENTS = "learned_moments"

    @classmethod
    def parse(cls, value: Union[str, "LatentMode"]) -> "LatentMode":
        aliases = {"normal": cls.STANDARD_NORMAL, "learned": cls.LEARNED_MOMENTS}
        if isinstance(value, cls):
            return value
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ModelSpecError(f"Unknown latent mode {value!r}")


class LatentSource:
    """
    Draws generator inputs.

    ``standard_normal`` samples N(0, I). ``learned_moments`` picks a stored
    (mu, sigma) pair uniformly and returns mu + sigma * eps.
    """

    def __init__(
        self,
        mode: Union[str, LatentMode] = LatentMode.STANDARD_NORMAL,
        dim: int = 100,
        moments: Optional[Tuple[torch.Tensor, torch.Tensor]] = None,
    ):
        self.mode = LatentMode.parse(mode)
        self.dim = int(dim)
        if self.dim < 1:
            raise ModelSpecError(f"latent dim must be >= 1, got {dim}")

        self.mu: Optional[torch.Tensor] = None
        self.sigma: Optional[torch.Tensor] = None
        if self.mode == LatentMode.LEARNED_MOMENTS:
            if moments is None:
                raise ModelSpecError("learned_moments latent needs a moment bank")
            mu, sigma = (torch.as_tensor(m, dtype=torch.float32).detach().cpu() for m in moments)
            if mu.ndim != 2 or mu.shape != sigma.shape or mu.shape[0] == 0:
                raise ModelSpecError(f"moment bank must be two equal (n, dim) tensors, got {tuple(mu.shape)}")
            if mu.shape[1] != self.dim:
                raise ModelSpecError(f"moment width {mu.shape[1]} does not match latent dim {self.dim}")
            self.mu, self.sigma = mu, sigma

    @property
    def bank_size(self) -> int:
        return 0 if self.mu is None else int(self.mu.shape[0])

    def sample(self, n: int, generator: Optional[torch.Generator] = None,
               device: Union[str, torch.device] = "cpu") -> torch.Tensor:
        """Return an (n, dim) latent batch drawn on CPU and moved to ``device``."""
        eps = torch.randn((n, self.dim), generator=generator)
        if self.mode == LatentMode.STANDARD_NORMAL:
            return eps.to(device)
        idx = torch.randint(self.bank_size, (n,), generator=generator)
        return (self.mu[idx] + self.sigma[idx] * eps).to(device)

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "dim": self.dim, "bank_size": self.bank_size}

    @classmethod
    def from_bank(cls, path: Union[str, Path], dim: Optional[int] = None) -> "LatentSource":
        """Learned-moments source from a saved bank; ``dim`` must match when given."""
        mu, sigma = load_moments(path)
        if dim is not None and mu.shape[1] != dim:
            raise CheckpointError(f"{path}: moment width {mu.shape[1]} does not match latent dim {dim}")
        return cls(LatentMode.LEARNED_MOMENTS, mu.shape[1], (mu, sigma))


def save_moments(mu: torch.Tensor, sigma: torch.Tensor, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({"mu": mu.detach().cpu(), "sigma": sigma.detach().cpu()}, path)
    logger.info(f"Saved moment bank ({mu.shape[0]} x {mu.shape[1]}) to {path}")
    return path


def load_moments(path: Union[str, Path]) -> Tuple[torch.Tensor, torch.Tensor]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Moment bank not found: {path}")
    try:
        data = torch.load(path, map_location="cpu")
        return data["mu"], data["sigma"]
    except Exception as e:
        raise CheckpointError(f"Corrupt moment bank {path}: {e}") from e
