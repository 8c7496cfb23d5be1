"""Ranking, the n-step explore schedule, and per-click pricing rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class AllocationSchedule:
    """Which rank sits in which slot at every step of one phase.

    ``slots[t][j]`` is the rank (1-based) shown in slot ``j+1`` at step
    ``t+1``, or ``None`` when there are not enough bidders to fill it.
    """

    N: int
    K: int
    n: int
    L: int
    slots: tuple
    explore_active: tuple

    def positions(self, rank: int) -> list:
        """Slot (1-based) held by ``rank`` at each step, ``None`` if not shown."""
        out = []
        for row in self.slots:
            try:
                out.append(row.index(rank) + 1)
            except ValueError:
                out.append(None)
        return out

    def position_matrix(self) -> np.ndarray:
        """``(N, n)`` int array of 1-based slots per rank and step; 0 = not shown."""
        pos = np.zeros((self.N, self.n), dtype=int)
        for t, row in enumerate(self.slots):
            for j, rank in enumerate(row):
                if rank is not None:
                    pos[rank - 1, t] = j + 1
        return pos


def rank_bidders(bids: Sequence[float], weights: Optional[Sequence[float]] = None) -> list[int]:
    """Order bidder indices (0-based) by ``weight * bid``, largest first.

    Ties go to the smaller input index.
    """
    bids = list(bids)
    if weights is None:
        weights = [1.0] * len(bids)
    weights = list(weights)
    if len(weights) != len(bids):
        raise ValueError("need one weight per bidder")
    if any(not w > 0 for w in weights):
        raise ValueError("ranking weights must be strictly positive")
    return sorted(range(len(bids)), key=lambda i: -weights[i] * bids[i])


def build_schedule(N: int, K: int, n: int, L: int) -> AllocationSchedule:
    """Allocate slots for the ``n`` steps of one exploration phase.

    At step ``t`` the top ``n`` ranks are rotated left by ``t-1``; the first
    ``L`` of that ordering take the explore slots. Everyone else, in rank
    order, fills slots ``L+1..K``.
    """
    if n < 1 or L < 0 or L > K or n > N or L > n:
        raise ValueError(f"invalid explore config N={N} K={K} n={n} L={L}")
    rows = []
    active = []
    for t in range(n):
        order = [(t + k) % n + 1 for k in range(n)]
        explore = order[:L]
        taken = set(explore)
        rest = [r for r in range(1, N + 1) if r not in taken]
        row = explore + rest[: K - L]
        row += [None] * (K - len(row))
        rows.append(tuple(row))
        active.append(frozenset(explore))
    return AllocationSchedule(N, K, n, L, tuple(rows), tuple(active))


def gsp_prices(bids: Sequence[float], q: Sequence[float]) -> np.ndarray:
    """Per-click GSP prices ``q_{i+1} b_{i+1} / q_i`` for ranked bidders."""
    b = np.asarray(bids, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0):
        raise ValueError("quality scores must be positive")
    p = np.zeros_like(b)
    p[:-1] = q[1:] * b[1:] / q[:-1]
    return p


def laddered_prices(
    eff_ctrs,
    weights: Sequence[float],
    bids: Sequence[float],
    k_tilde: Optional[int] = None,
) -> np.ndarray:
    """Laddered per-click prices for ranked bidders.

    ``eff_ctrs[i, j]`` is the (effective) CTR bidder ``i+1`` would get at
    rank ``j+1``. With the one-step CTR matrix this is the plain laddered
    auction; with the n-step effective matrix it is its exploratory version.

        p_i = sum_{j>=i} (c_ij - c_i,j+1) / c_ii * w_{j+1} b_{j+1} / w_i
    """
    c = np.asarray(getattr(eff_ctrs, "entries", eff_ctrs), dtype=float)
    w = np.asarray(weights, dtype=float)
    b = np.asarray(bids, dtype=float)
    N = len(b)
    kt = c.shape[1] if k_tilde is None else k_tilde
    if np.any(w <= 0):
        raise ValueError("ranking weights must be positive")
    # boundary convention: b_{N+1} = 0 and c_{i,kt+1} = 0
    wb = np.zeros(kt + 2)
    m = min(N, kt + 1)
    wb[1 : m + 1] = (w * b)[:m]  # wb[j] = w_j b_j, 1-based
    p = np.zeros(N)
    for i in range(1, min(N, kt) + 1):
        row = np.zeros(kt + 2)
        row[1 : kt + 1] = c[i - 1, :kt]
        if row[i] <= 0:
            raise ValueError(f"zero effective CTR for rank {i}")
        j = np.arange(i, kt + 1)
        p[i - 1] = np.sum((row[j] - row[j + 1]) * wb[j + 1]) / (row[i] * w[i - 1])
    return p


@dataclass(frozen=True)
class LadderedOutcome:
    """Result of running a laddered auction on arbitrary (unranked) bids."""

    order: list          # bidder indices by rank
    rank: np.ndarray     # 1-based rank of each bidder
    price: np.ndarray    # per-click price of each bidder
    clicks: np.ndarray   # expected clicks of each bidder at its rank


def run_laddered(eff_rows, weights: Sequence[float], bids: Sequence[float]) -> LadderedOutcome:
    """Rank by ``weight * bid`` and price with the laddered rule.

    ``eff_rows[i]`` is bidder ``i``'s effective CTR as a function of rank
    (input order, not rank order).
    """
    rows = np.asarray(eff_rows, dtype=float)
    w = np.asarray(weights, dtype=float)
    b = np.asarray(bids, dtype=float)
    order = rank_bidders(b, w)
    ranked_rows = rows[order]
    prices_ranked = laddered_prices(ranked_rows, w[order], b[order])
    N = len(b)
    kt = rows.shape[1]
    rank = np.empty(N, dtype=int)
    price = np.empty(N)
    clicks = np.zeros(N)
    for r, i in enumerate(order, start=1):
        rank[i] = r
        price[i] = prices_ranked[r - 1]
        if r <= kt:
            clicks[i] = rows[i, r - 1]
    return LadderedOutcome(order, rank, price, clicks)
