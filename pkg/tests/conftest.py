import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aoicred import ServiceDistribution, SystemConfig  # noqa: E402


@pytest.fixture
def cfg9():
    """Single process used throughout the trade-off figure: lambda=9, mu_Y=1, alpha=1."""
    return SystemConfig.single(rate=9.0, alpha=1.0, service_mean=1.0)


@pytest.fixture
def sym2():
    return SystemConfig.multi([6.0, 6.0], [2.0, 2.0], ServiceDistribution(1.5), beta=0.5)
