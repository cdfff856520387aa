import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from topomill.config import DEFAULT_PROCESS, DEFAULT_GRID
from topomill.milling import ProcessParams
from topomill.stability import GridSpec


@pytest.fixture(scope="session")
def process():
    return ProcessParams(**DEFAULT_PROCESS)


@pytest.fixture(scope="session")
def default_grid():
    return GridSpec(**DEFAULT_GRID)


@pytest.fixture(scope="session")
def window():
    """Default calibration window as plain numbers (speeds rpm, depths m)."""
    return dict(speed_lo=DEFAULT_GRID["speed_range"][0],
                speed_hi=DEFAULT_GRID["speed_range"][1],
                depth_lo=DEFAULT_GRID["depth_range"][0],
                depth_hi=DEFAULT_GRID["depth_range"][1])


def rng_for(name: str) -> np.random.Generator:
    import zlib
    return np.random.default_rng(zlib.crc32(name.encode()))
