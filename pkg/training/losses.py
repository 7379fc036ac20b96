"""Loss functions for the adversarial and variational objectives."""

from typing import NamedTuple, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F


class WassersteinLosses(NamedTuple):
    critic_loss: torch.Tensor
    generator_loss: torch.Tensor
    estimate_real: torch.Tensor
    estimate_fake: torch.Tensor
    gap: torch.Tensor


class VAELoss(NamedTuple):
    total: torch.Tensor
    reconstruction: torch.Tensor
    kl: torch.Tensor


def wasserstein_losses(scores_real: torch.Tensor, scores_fake: torch.Tensor) -> WassersteinLosses:
    """
    Critic and generator objectives from raw critic scores.

    critic_loss = mean(fake) - mean(real), so minimizing it widens the gap
    between the real and fake estimates; generator_loss = -mean(fake).
    """
    scores_real = torch.as_tensor(scores_real).reshape(-1)
    scores_fake = torch.as_tensor(scores_fake).reshape(-1)
    if scores_real.numel() == 0 or scores_fake.numel() == 0:
        raise ValueError("critic scores must be non-empty")
    estimate_real = scores_real.mean()
    estimate_fake = scores_fake.mean()
    gap = estimate_real - estimate_fake
    return WassersteinLosses(
        critic_loss=-gap,
        generator_loss=-estimate_fake,
        estimate_real=estimate_real,
        estimate_fake=estimate_fake,
        gap=gap,
    )


@torch.no_grad()
def clip_weights(model: nn.Module, c: float) -> None:
    """Clamp every trainable parameter of ``model`` into [-c, c] in place."""
    if c <= 0:
        raise ValueError(f"clip constant must be > 0, got {c}")
    for p in model.parameters():
        if p.requires_grad:
            p.clamp_(-c, c)


def discriminator_loss(d_real: torch.Tensor, d_fake: torch.Tensor, real_target: float = 1.0) -> torch.Tensor:
    """
    Mean of the real and fake binary cross-entropies.

    ``real_target`` below 1 gives one-sided label smoothing; fake targets stay 0.
    """
    loss_real = F.binary_cross_entropy(d_real, torch.full_like(d_real, real_target))
    loss_fake = F.binary_cross_entropy(d_fake, torch.zeros_like(d_fake))
    return 0.5 * (loss_real + loss_fake)


def generator_loss(d_fake: torch.Tensor) -> torch.Tensor:
    return F.binary_cross_entropy(d_fake, torch.ones_like(d_fake))


def kl_divergence(mu: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
    """KL(N(mu, sigma^2) || N(0, 1)) summed over latent units, averaged over the batch."""
    mu = mu.reshape(mu.shape[0], -1)
    sigma = sigma.reshape(sigma.shape[0], -1)
    var = sigma.pow(2)
    log_var = torch.log(var.clamp_min(torch.finfo(var.dtype).tiny))
    return (-0.5 * (1 + log_var - mu.pow(2) - var).sum(dim=1)).mean()


def vae_loss(
    x: torch.Tensor,
    x_hat: torch.Tensor,
    mu: torch.Tensor,
    sigma: torch.Tensor,
    features: Optional[Tuple[torch.Tensor, torch.Tensor]] = None,
) -> VAELoss:
    """
    Reconstruction plus KL prior term.

    By default reconstruction is pixel-wise binary cross-entropy summed over
    pixels and averaged over the batch. When ``features`` holds the hidden
    activations of a discriminator for x and x_hat, reconstruction is the
    Gaussian negative log-likelihood of those features instead (half the
    squared error, up to a constant).

    Raises:
        ValueError: If shapes differ or x lies outside [0, 1]
    """
    if x.shape != x_hat.shape:
        raise ValueError(f"x and x_hat shapes differ: {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    if mu.shape != sigma.shape:
        raise ValueError(f"mu and sigma shapes differ: {tuple(mu.shape)} vs {tuple(sigma.shape)}")
    if x.numel() and (x.min() < 0 or x.max() > 1):
        raise ValueError("x must lie in [0, 1]")

    batch = x.shape[0]
    if features is None:
        reconstruction = F.binary_cross_entropy(x_hat, x, reduction="sum") / batch
    else:
        real_features, fake_features = features
        reconstruction = 0.5 * (real_features - fake_features).pow(2).sum() / batch
    kl = kl_divergence(mu, sigma)
    return VAELoss(reconstruction + kl, reconstruction, kl)
