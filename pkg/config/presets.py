"""Experiment presets shipped as YAML files under config/presets."""

from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from utils.logging import get_logger

logger = get_logger(__name__)

PRESETS_DIR = Path(__file__).parent / "presets"
PRESET_NAMES = tuple(f"e{i}" for i in range(1, 12))


def list_presets(presets_dir: Optional[Path] = None) -> List[str]:
    """Preset names available on disk, in experiment order."""
    presets_dir = Path(presets_dir or PRESETS_DIR)
    names = [p.stem for p in presets_dir.glob("*.yaml")]
    return sorted(names, key=lambda n: (len(n), n))


def load_preset(name: str, presets_dir: Optional[Path] = None) -> Dict[str, Any]:
    """
    Load a preset mapping.

    Args:
        name: Preset name such as ``e5`` (case-insensitive)
        presets_dir: Directory to read from; defaults to the bundled presets

    Returns:
        Mapping accepted by ``TrainConfig.from_dict``, with ``name`` set

    Raises:
        ValueError: If the preset does not exist or is not a mapping
    """
    name = name.lower()
    path = Path(presets_dir or PRESETS_DIR) / f"{name}.yaml"
    if not path.exists():
        raise ValueError(f"Unknown preset {name!r}; available: {list_presets(presets_dir)}")

    with open(path, "r") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"Preset {path} must contain a mapping")

    data["name"] = name
    logger.debug(f"Loaded preset {name} from {path}")
    return data
