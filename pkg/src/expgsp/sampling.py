"""Random instance generators used by the property tests and sweeps."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import AuctionInstance, Bidder, CtrMatrix, ExploreConfig, PositionCurve, is_sne_safe


def sne_safe_configs(max_K: int = 10) -> list[tuple[int, int, int]]:
    """Every ``(K, n, L)`` with ``K <= max_K`` whose effective CTRs are monotone."""
    out = []
    for K in range(1, max_K + 1):
        for L in range(0, K + 1):
            for n in range(1, K + 2):
                if is_sne_safe(K, n, L):
                    out.append((K, n, L))
    return out


def random_decreasing(rng: np.random.Generator, K: int, size: Optional[int] = None,
                      min_gap: float = 0.02) -> np.ndarray:
    """Strictly decreasing values in ``(0, 1]``, successive gaps of at least ``min_gap`` (relative)."""
    shape = (K,) if size is None else (size, K)
    steps = rng.uniform(min_gap, 1.0, size=shape)
    top = rng.uniform(0.3, 1.0, size=shape[:-1] + (1,))
    # cumulative steps from the bottom, scaled so the first entry is `top`
    acc = np.cumsum(steps[..., ::-1], axis=-1)[..., ::-1]
    return acc / acc[..., :1] * top


def random_instance(
    rng: np.random.Generator,
    K: int,
    n: int,
    L: int,
    N: Optional[int] = None,
    separable: bool = True,
    perfect_estimates: Optional[bool] = None,
) -> AuctionInstance:
    """A random instance ranked by ``q * v`` (the equilibrium order).

    With ``perfect_estimates`` the auctioneer's ``q`` equals the true ``e``;
    when ``None`` a coin flip decides.
    """
    if N is None:
        N = max(K, n, 2) + int(rng.integers(0, 3))
    gam = random_decreasing(rng, K)
    e = rng.uniform(0.05, 1.0, N)
    if perfect_estimates is None:
        perfect_estimates = bool(rng.integers(0, 2))
    q = e.copy() if perfect_estimates else rng.uniform(0.05, 1.0, N)
    v = rng.uniform(0.1, 10.0, N)
    bidders = [Bidder(i + 1, float(v[i]), float(e[i]), float(q[i])) for i in range(N)]
    ctr = None
    if not separable:
        ctr = CtrMatrix(random_decreasing(rng, K, size=N))
    return AuctionInstance.build(bidders, PositionCurve(gam), ExploreConfig(n, L), ctr=ctr)
