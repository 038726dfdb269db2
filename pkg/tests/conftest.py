import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from realitygen import FormatTag, random_cloud  # noqa: E402


@pytest.fixture
def kitti_cloud():
    return random_cloud(5000, seed=11)


@pytest.fixture
def nusc_cloud():
    return random_cloud(5000, fmt=FormatTag.NUSCENES5, seed=12)


@pytest.fixture
def big_cloud():
    """Realistically sized sweep (~120k points, HDL-64E style)."""
    return random_cloud(120_000, seed=99)
