"""Checkpoint files: network spec, weights and the input range they expect."""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import torch

from dataset.heightmap import NormRange
from models.network import SpecNetwork
from models.specs import ModelSpec
from utils.errors import CheckpointError, ModelSpecError
from utils.logging import get_logger

logger = get_logger(__name__)


def checkpoint_name(kind: str, epoch: int) -> str:
    return f"{kind}_e{epoch:05d}.pt"


def save_checkpoint(
    path: Union[str, Path],
    kind: str,
    network: SpecNetwork,
    norm_range: NormRange,
    epoch: int,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Save a SpecNetwork with everything needed to rebuild it.

    Args:
        path: Destination file
        kind: Role of the network (generator, critic, encoder, decoder ...)
        network: Network to save
        norm_range: Range of images the network consumes or emits
        epoch: Epoch the weights belong to
        extra: Additional metadata

    Returns:
        Written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    alpha = network.alpha
    torch.save(
        {
            "kind": kind,
            "epoch": int(epoch),
            "spec": network.spec.to_dict(),
            "state_dict": {k: v.detach().cpu() for k, v in network.state_dict().items()},
            "norm_range": NormRange.parse(norm_range).value,
            "alpha": None if alpha is None else alpha.value,
            "extra": dict(extra or {}),
        },
        path,
    )
    logger.debug(f"Saved {kind} checkpoint to {path}")
    return path


def load_checkpoint(
    path: Union[str, Path], device: Union[str, torch.device] = "cpu"
) -> Tuple[SpecNetwork, Dict[str, Any]]:
    """
    Rebuild a network from a checkpoint.

    Returns:
        (network in eval mode, metadata dict without the weights)

    Raises:
        CheckpointError: If the file is missing or unreadable
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        data = torch.load(path, map_location="cpu")
        spec = ModelSpec.from_dict(data["spec"])
        network = SpecNetwork(spec, initialize=False)
        network.load_state_dict(data["state_dict"])
    except ModelSpecError as e:
        raise CheckpointError(f"Checkpoint {path} holds an invalid model: {e}") from e
    except Exception as e:
        raise CheckpointError(f"Corrupt checkpoint {path}: {e}") from e

    if data.get("alpha") is not None and network.alpha is not None:
        network.alpha.set(data["alpha"])
    network.to(device).eval()
    meta = {k: v for k, v in data.items() if k != "state_dict"}
    meta["norm_range"] = NormRange.parse(meta.get("norm_range", NormRange.SIGNED))
    return network, meta
