"""Variational autoencoder assembled from the encoder and decoder specs."""

from typing import Optional, Tuple

import torch
import torch.nn as nn

from .builders import VAE_LATENT_DIM, build_vae_decoder, build_vae_encoder
from .network import SpecNetwork


def reparameterize(mu: torch.Tensor, sigma: torch.Tensor, epsilon: torch.Tensor) -> torch.Tensor:
    """
    z = mu + sigma * epsilon, elementwise.

    Raises:
        ValueError: If the three tensors differ in shape
    """
    mu, sigma, epsilon = (torch.as_tensor(t, dtype=torch.float32) for t in (mu, sigma, epsilon))
    if mu.shape != sigma.shape or mu.shape != epsilon.shape:
        raise ValueError(
            f"mu, sigma and epsilon must have equal shapes, got "
            f"{tuple(mu.shape)}, {tuple(sigma.shape)}, {tuple(epsilon.shape)}"
        )
    return mu + sigma * epsilon


class VAE(nn.Module):
    """Encoder with ``mu``/``sigma`` heads and a sigmoid decoder."""

    def __init__(self, latent_dim: int = VAE_LATENT_DIM, size: int = 128, decoder_dropout: bool = True):
        super().__init__()
        self.latent_dim = latent_dim
        self.encoder = SpecNetwork(build_vae_encoder(latent_dim, size))
        self.decoder = SpecNetwork(build_vae_decoder(latent_dim, size, dropout=decoder_dropout))

    def encode(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Return (mu, sigma); the sigma head is read as log-variance."""
        mu, log_var = self.encoder(x)
        return mu, torch.exp(0.5 * log_var)

    def forward(
        self, x: torch.Tensor, generator: Optional[torch.Generator] = None
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        mu, sigma = self.encode(x)
        epsilon = torch.randn(mu.shape, generator=generator, device=mu.device, dtype=mu.dtype)
        x_hat = self.decoder(reparameterize(mu, sigma, epsilon))
        return x_hat, mu, sigma
