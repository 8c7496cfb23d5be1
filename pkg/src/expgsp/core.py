"""Domain types for exploratory sponsored-search auctions.

Bidders are stored in rank order (rank 1 first). Each bidder keeps the id it
had in the caller's input so results can be reported back in user order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Bidder:
    """One advertiser.

    Attributes:
        index: id of the bidder in the caller's input (1-based).
        value: true value per click ``v``.
        relevance: true relevance ``e`` (probability of a click if noticed).
        quality: the auctioneer's relevance estimate ``q`` (ranking weight).
        self_estimate: the bidder's own relevance estimate ``f``.
        bid: submitted bid per click; defaults to ``value``.
        value_estimate: the bidder's current estimate of ``value``.
    """

    index: int
    value: float
    relevance: float = 1.0
    quality: float = 1.0
    self_estimate: Optional[float] = None
    bid: Optional[float] = None
    value_estimate: Optional[float] = None

    @property
    def v_tilde(self) -> float:
        return self.value if self.value_estimate is None else self.value_estimate

    @property
    def b(self) -> float:
        return self.value if self.bid is None else self.bid

    @property
    def f(self) -> float:
        return self.relevance if self.self_estimate is None else self.self_estimate


@dataclass(frozen=True)
class PositionCurve:
    """Position click-through rates ``gamma_1 > ... > gamma_K > 0``."""

    gammas: tuple

    def __init__(self, gammas: Sequence[float]):
        object.__setattr__(self, "gammas", tuple(float(g) for g in gammas))

    @property
    def K(self) -> int:
        return len(self.gammas)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.gammas, dtype=float)

    def problems(self) -> list[str]:
        out = []
        if self.K == 0:
            out.append("gamma: at least one slot is required")
        for j, g in enumerate(self.gammas, start=1):
            if not (0.0 < g <= 1.0):
                out.append(f"gamma[{j}]={g} outside (0, 1]")
        for j in range(1, self.K):
            if not self.gammas[j - 1] > self.gammas[j]:
                out.append(
                    f"gamma not strictly decreasing at slot {j}: "
                    f"{self.gammas[j - 1]} <= {self.gammas[j]}"
                )
        return out


@dataclass(frozen=True)
class ExploreConfig:
    """``n`` explored bidders (and steps per phase), ``L`` explore slots."""

    n: int = 1
    L: int = 0

    def sne_safe(self, K: int) -> bool:
        """Whether the effective CTRs are guaranteed strictly monotone."""
        return is_sne_safe(K, self.n, self.L)


def is_sne_safe(K: int, n: int, L: int) -> bool:
    return 1 <= n <= min(K + 1, K + L) and 0 <= L and 2 * L <= n - 1


def k_tilde(K: int, n: int) -> int:
    return max(K, n)


@dataclass(frozen=True)
class CtrMatrix:
    """Non-separable CTRs: ``entries[i, j]`` is bidder ``i+1``'s CTR in slot ``j+1``.

    Rows follow the same order as the bidders they belong to.
    """

    entries: np.ndarray

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim != 2:
            raise ValueError("CTR matrix must be two-dimensional")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def K(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def separable(cls, gammas: Sequence[float], relevance: Sequence[float]) -> "CtrMatrix":
        return cls(np.outer(np.asarray(relevance, float), np.asarray(gammas, float)))

    def problems(self) -> list[str]:
        out = []
        c = self.entries
        for i, row in enumerate(c, start=1):
            if np.any(row <= 0) or np.any(row > 1):
                out.append(f"ctr row {i} has entries outside (0, 1]")
            if np.any(np.diff(row) >= 0):
                out.append(f"ctr row {i} not strictly decreasing")
        return out


@dataclass(frozen=True)
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    sne_safe: bool = False

    @property
    def valid(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class AuctionInstance:
    """A full game: ranked bidders, position curve, explore config.

    ``ctr`` is ``None`` for the separable model (CTR = gamma_j * e_i);
    otherwise it holds one row per ranked bidder.
    """

    bidders: tuple
    curve: PositionCurve
    explore: ExploreConfig = ExploreConfig()
    ctr: Optional[CtrMatrix] = None

    @classmethod
    def build(
        cls,
        bidders: Sequence[Bidder],
        curve: PositionCurve | Sequence[float],
        explore: ExploreConfig = ExploreConfig(),
        ctr=None,
        weights: Optional[Sequence[float]] = None,
    ) -> "AuctionInstance":
        """Rank ``bidders`` by weight * bid and return the ranked instance.

        ``weights`` default to each bidder's quality score. CTR matrix rows, if
        given, are assumed to be in the input order and are permuted along.
        """
        from .mechanisms import rank_bidders

        if not isinstance(curve, PositionCurve):
            curve = PositionCurve(curve)
        bidders = list(bidders)
        if weights is None:
            weights = [bd.quality for bd in bidders]
        order = rank_bidders([bd.b for bd in bidders], weights)
        ranked = tuple(bidders[i] for i in order)
        if ctr is not None:
            ctr = CtrMatrix(np.asarray(ctr.entries if isinstance(ctr, CtrMatrix) else ctr)[order])
        return cls(ranked, curve, explore, ctr)

    @property
    def N(self) -> int:
        return len(self.bidders)

    @property
    def K(self) -> int:
        return self.ctr.K if self.ctr is not None else self.curve.K

    @property
    def n(self) -> int:
        return self.explore.n

    @property
    def L(self) -> int:
        return self.explore.L

    @property
    def K_tilde(self) -> int:
        return k_tilde(self.K, self.n)

    @property
    def separable(self) -> bool:
        return self.ctr is None

    def values(self) -> np.ndarray:
        return np.array([bd.value for bd in self.bidders], dtype=float)

    def relevances(self) -> np.ndarray:
        return np.array([bd.relevance for bd in self.bidders], dtype=float)

    def qualities(self) -> np.ndarray:
        return np.array([bd.quality for bd in self.bidders], dtype=float)

    def value_estimates(self) -> np.ndarray:
        return np.array([bd.v_tilde for bd in self.bidders], dtype=float)

    def bids(self) -> np.ndarray:
        return np.array([bd.b for bd in self.bidders], dtype=float)

    def ctr_matrix(self) -> CtrMatrix:
        """Per-bidder, per-slot CTRs (builds gamma x e in the separable model)."""
        if self.ctr is not None:
            return self.ctr
        return CtrMatrix.separable(self.curve.gammas, self.relevances())

    def with_explore(self, n: int, L: int) -> "AuctionInstance":
        return AuctionInstance(self.bidders, self.curve, ExploreConfig(n, L), self.ctr)


def validate_instance(inst: AuctionInstance) -> ValidationReport:
    """List every violated structural assumption of ``inst``.

    Never raises; an empty ``violations`` list means the instance is valid.
    """
    v: list[str] = []
    K = inst.K
    if inst.ctr is None:
        v.extend(inst.curve.problems())
    else:
        v.extend(inst.ctr.problems())
        if inst.ctr.entries.shape[0] != inst.N:
            v.append(f"ctr has {inst.ctr.entries.shape[0]} rows for {inst.N} bidders")

    for bd in inst.bidders:
        tag = f"bidder {bd.index}"
        if not (0.0 < bd.relevance <= 1.0):
            v.append(f"{tag}: relevance e={bd.relevance} outside (0, 1]")
        if not (0.0 < bd.f <= 1.0):
            v.append(f"{tag}: self estimate f={bd.f} outside (0, 1]")
        if not bd.quality > 0.0:
            v.append(f"{tag}: quality q={bd.quality} must be positive")
        if not bd.value >= 0.0:
            v.append(f"{tag}: value v={bd.value} negative")
        if not bd.v_tilde >= 0.0:
            v.append(f"{tag}: value estimate {bd.v_tilde} negative")
        if not bd.b >= 0.0:
            v.append(f"{tag}: bid b={bd.b} negative")

    scores = [bd.quality * bd.b for bd in inst.bidders]
    for r in range(1, len(scores)):
        if scores[r] > scores[r - 1]:
            v.append(f"bidders not in rank order at rank {r + 1}")
            break

    n, L = inst.n, inst.L
    if inst.N < K:
        v.append(f"N={inst.N} bidders fewer than K={K} slots")
    if n < 1:
        v.append(f"n={n} must be at least 1")
    if L < 0:
        v.append(f"L={L} must be nonnegative")
    if L > K:
        v.append(f"L={L} exceeds K={K}")
    if n > inst.N:
        v.append(f"n={n} exceeds N={inst.N}")
    if L > n:
        v.append(f"L={L} exceeds n={n}")

    return ValidationReport(v, is_sne_safe(K, n, L))
