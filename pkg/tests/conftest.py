import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from graspdet.camera import Intrinsics
from graspdet.fas import FASConfig, GripperConfig
from graspdet.geometry import OrientationTable


@pytest.fixture(scope="session")
def gripper():
    return GripperConfig()


@pytest.fixture(scope="session")
def fas_cfg():
    return FASConfig()


@pytest.fixture(scope="session")
def small_table():
    return OrientationTable.build(12, 4)


@pytest.fixture(scope="session")
def full_table():
    return OrientationTable.build(60, 6)


@pytest.fixture(scope="session")
def small_intr():
    return Intrinsics(fx=200.0, fy=200.0, cx=64.0, cy=48.0, width=128, height=96, depth_scale=1e-4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
