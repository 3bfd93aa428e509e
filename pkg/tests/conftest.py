from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sliceseg.config import EngineConfig
from sliceseg.engine import Engine
from sliceseg.volume.model import Volume

MOCK_BRIDGE = [sys.executable, str(Path(__file__).parent / "mock_bridge.py")]


@pytest.fixture
def engine(tmp_path) -> Engine:
    return Engine(EngineConfig(data_root=tmp_path / "data"))


@pytest.fixture
def tiny_volume() -> Volume:
    """2x2x2 volume with voxels 0..7 in canonical order."""
    return Volume(
        dims=(2, 2, 2), spacing=(1.0, 1.0, 1.0), affine=np.eye(4),
        data=np.arange(8, dtype=np.float32),
    )


def make_volume(grid: np.ndarray, spacing=(1.0, 1.0, 1.0)) -> Volume:
    """Volume from a [k, j, i] grid."""
    nz, ny, nx = grid.shape
    return Volume(dims=(nx, ny, nz), spacing=spacing, affine=np.eye(4),
                  data=np.ascontiguousarray(grid, dtype=np.float32).reshape(-1))
