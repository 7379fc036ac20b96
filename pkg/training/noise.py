"""Instance-noise schedules and application."""

import warnings
from typing import Optional, Tuple, Union

import torch

from .config import NoiseSchedule


def noise_factor(schedule: Union[str, int, NoiseSchedule], epoch: int, epochs: int) -> float:
    """
    Noise scale at ``epoch`` (1-based, 0 allowed) of ``epochs``.

    Schedule 1 rises linearly to 0.5. Schedule 3 rises to 0.5 at the
    midpoint and falls back to 0. Schedule 2 matches schedule 3 up to the
    midpoint and then follows half of its descent; ``2-literal`` drops to 0
    after the midpoint.

    Raises:
        ValueError: If epoch is outside [0, epochs] or epochs is too small
    """
    schedule = NoiseSchedule.parse(schedule)
    if schedule == NoiseSchedule.NONE:
        return 0.0
    minimum = 1 if schedule == NoiseSchedule.LINEAR else 2
    if epochs < minimum:
        raise ValueError(f"schedule {schedule.value} needs epochs >= {minimum}, got {epochs}")
    if not 0 <= epoch <= epochs:
        raise ValueError(f"epoch must be in [0, {epochs}], got {epoch}")

    if schedule == NoiseSchedule.LINEAR:
        return epoch * 0.5 / epochs

    half = epochs / 2
    if epoch <= half:
        return epoch * 0.5 / half
    descent = 0.5 - (epoch - half) * 0.5 / half
    if schedule == NoiseSchedule.TRIANGLE:
        return descent
    if schedule == NoiseSchedule.REPAIRED:
        return descent / 2
    warnings.warn(
        "noise schedule '2-literal' is constant 0 after the midpoint; use '2'",
        DeprecationWarning,
        stacklevel=2,
    )
    return 0.5 - epoch * 0.5 / epoch


def apply_instance_noise(
    batch: torch.Tensor,
    factor: float,
    generator: Optional[torch.Generator] = None,
    bounds: Tuple[float, float] = (-1.0, 1.0),
) -> torch.Tensor:
    """
    Add an independent standard-normal field scaled by ``factor`` to every
    sample, then clamp to ``bounds``.
    """
    if factor < 0:
        raise ValueError(f"noise factor must be >= 0, got {factor}")
    if factor == 0:
        return batch
    noise = torch.randn(batch.shape, generator=generator).to(batch.device, batch.dtype)
    return (batch + factor * noise).clamp(bounds[0], bounds[1])
