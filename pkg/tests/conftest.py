import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from expgsp import AuctionInstance, Bidder, ExploreConfig, PositionCurve  # noqa: E402

GAMMA = (0.6, 0.3, 0.1)
VALUES = (10.0, 6.0, 4.0)


def running_example(n: int = 3, L: int = 1, e: float = 1.0) -> AuctionInstance:
    bidders = [Bidder(i + 1, v, e, e) for i, v in enumerate(VALUES)]
    return AuctionInstance.build(bidders, PositionCurve(GAMMA), ExploreConfig(n, L))


@pytest.fixture
def example():
    return running_example()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
