"""Shared fixtures for the terrain GAN test suite."""

import os
import sys
from pathlib import Path

import numpy as np
import pytest
import torch

# Add project root to path
project_root = str(Path(__file__).parent.parent.absolute())
if project_root not in sys.path:
    sys.path.insert(0, project_root)

RUN_SLOW = os.getenv("TERRAIN_GAN_RUN_SLOW") == "1"


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip_slow = pytest.mark.skip(reason="set TERRAIN_GAN_RUN_SLOW=1 to run desk-scale trainings")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def land_tiles(n: int, size: int, seed: int = 0) -> np.ndarray:
    """Smooth synthetic terrain tiles with no water and no fill sentinel."""
    gen = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    tiles = []
    for _ in range(n):
        fx, fy, phase = gen.uniform(1.0, 3.0), gen.uniform(1.0, 3.0), gen.uniform(0, 2 * np.pi)
        surface = np.sin(2 * np.pi * fx * x + phase) * np.cos(2 * np.pi * fy * y)
        tiles.append(np.rint(140 + 80 * surface + gen.normal(0, 4, (size, size))))
    return np.clip(np.stack(tiles), 30, 250).astype(np.uint8)


@pytest.fixture
def tiles32():
    return land_tiles(8, 32)


@pytest.fixture
def corpus32(tiles32):
    from dataset import TileCorpus

    return TileCorpus.from_array(tiles32, seed=0)


@pytest.fixture
def fresh_config(monkeypatch, tmp_path):
    """Reload config with the output dir pointed at a temp directory."""
    from config import reset_config

    monkeypatch.setenv("TERRAIN_GAN_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("LOG_FILE", "")
    reset_config()
    yield tmp_path
    reset_config()
