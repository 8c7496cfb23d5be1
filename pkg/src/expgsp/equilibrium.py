"""Symmetric Nash equilibrium bids, revenue, efficiency and the loss bounds.

All rank-indexed arguments are in rank order (rank 1 first). Effective CTRs
are passed as plain arrays ``theta[0..Ktilde-1]``; ranks past the array and
bidders past ``N`` count as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import AuctionInstance, CtrMatrix
from .effective_ctr import effective_ctr_matrix, effective_position_ctrs
from .mechanisms import gsp_prices, laddered_prices


def _pad(x, size: int, fill: float = 0.0) -> np.ndarray:
    """1-based copy of ``x`` of length ``size + 1`` (index 0 unused)."""
    x = np.asarray(x, dtype=float)
    out = np.full(size + 1, fill)
    m = min(len(x), size)
    out[1 : m + 1] = x[:m]
    return out


@dataclass(frozen=True)
class BidProfile:
    bids: np.ndarray
    flavor: str = "explicit"  # "min-sne" | "max-sne" | "explicit"


def _sne_bids(theta, v, q, k_tilde, upper: bool) -> BidProfile:
    theta = np.asarray(theta, float)
    v_in = np.asarray(v, float)
    N = len(v_in)
    kt = len(theta) if k_tilde is None else k_tilde
    size = max(N, kt) + 2
    th = _pad(theta[:kt], size)
    vv = _pad(v_in, size)
    qq = _pad(q, size, fill=1.0)
    qq[N + 1 :] = 1.0

    bb = np.zeros(size + 1)  # 1-based; b_{N+1} = 0
    bb[1 : N + 1] = v_in     # rank 1 and ranks past kt+1 bid their value
    for i in range(min(kt, N - 1), 0, -1):
        if th[i] <= 0:
            raise ValueError(f"effective CTR of rank {i} is zero")
        src = i if upper else i + 1
        rhs = (th[i] - th[i + 1]) * vv[src] * qq[src] + th[i + 1] * qq[i + 2] * bb[i + 2]
        bb[i + 1] = rhs / (th[i] * qq[i + 1])
    bids = bb[1 : N + 1].copy()
    return BidProfile(bids, "max-sne" if upper else "min-sne")


def min_sne_bids(theta, v, q, k_tilde: Optional[int] = None) -> BidProfile:
    """Lowest symmetric-equilibrium bids (best for bidders, worst for revenue).

    Solves ``theta_i q_{i+1} b_{i+1} = sum_{j>=i} (theta_j - theta_{j+1}) v_{j+1} q_{j+1}``.
    Rank 1 bids its value; ``v`` may hold the bidders' own value estimates.
    """
    return _sne_bids(theta, v, q, k_tilde, upper=False)


def max_sne_bids(theta, v, q, k_tilde: Optional[int] = None) -> BidProfile:
    """Highest symmetric-equilibrium bids (``v_{j+1} q_{j+1}`` replaced by ``v_j q_j``)."""
    return _sne_bids(theta, v, q, k_tilde, upper=True)


def verify_sne(bids, theta, v, q, tol: float = 1e-9) -> bool:
    """Check both sides of the SNE inequality chain for every rank."""
    b_in = np.asarray(getattr(bids, "bids", bids), float)
    N = len(b_in)
    size = max(N, len(theta)) + 2
    th = _pad(theta, size)
    vv = _pad(v, size)
    bb = _pad(b_in, size)
    qq = _pad(q, size, fill=1.0)
    for i in range(1, N + 1):
        mid = th[i] * qq[i + 1] * bb[i + 1]
        rest = th[i + 1] * qq[i + 2] * bb[i + 2]
        low = (th[i] - th[i + 1]) * vv[i + 1] * qq[i + 1] + rest
        high = (th[i] - th[i + 1]) * vv[i] * qq[i] + rest
        if low > mid + tol or mid > high + tol:
            return False
    return True


def expected_revenue(theta, e, q, v, top: Optional[int] = None) -> float:
    """Expected revenue at the minimum SNE.

    ``sum_{s<=top} sum_{j>=s} (e_s/q_s) (theta_j - theta_{j+1}) q_{j+1} v_{j+1}``;
    ``top`` restricts to payments of the highest ``top`` ranks (default: all).
    """
    theta = np.asarray(theta, float)
    kt = len(theta)
    size = max(len(v), kt) + 2
    th = _pad(theta, size)
    ee = _pad(e, size)
    qq = _pad(q, size, fill=1.0)
    vv = _pad(v, size)
    j = np.arange(1, kt + 1)
    terms = (th[j] - th[j + 1]) * qq[j + 1] * vv[j + 1]
    tails = np.cumsum(terms[::-1])[::-1]  # tails[s-1] = sum_{j>=s}
    s_max = kt if top is None else min(top, kt)
    s = np.arange(1, s_max + 1)
    return float(np.sum(ee[s] / qq[s] * tails[: s_max]))


def revenue_at_bids(theta, e, q, bids) -> float:
    """Revenue as ``sum_i theta_i e_i p_i`` with GSP prices at ``bids``."""
    b = np.asarray(getattr(bids, "bids", bids), float)
    p = gsp_prices(b, q)
    kt = min(len(theta), len(b))
    return float(np.sum(np.asarray(theta)[:kt] * np.asarray(e)[:kt] * p[:kt]))


# relative differences below this are rounding noise and reported as exactly 0
_SNAP = 1e-12


def _relative_loss(base: float, total: float, n: int) -> float:
    diff = base - total / n
    if abs(diff) <= _SNAP * abs(base):
        return 0.0
    return diff / base


def cost_of_uncertainty(R0: float, R: float, n: int) -> float:
    """Relative loss in revenue per impression, ``(R0 - R/n) / R0``."""
    if not R0 > 0:
        raise ValueError("baseline revenue R0 must be positive")
    return _relative_loss(R0, R, n)


def _row_ratio_min(row: np.ndarray, first: int, n: int, L: int) -> float:
    """Smallest ``(c_{j+L} - c_{j+1+L}) / (c_j - c_{j+1})`` for ``first <= j < n-L``."""
    K = len(row)
    c = np.zeros(K + n + L + 3)
    c[1 : K + 1] = row
    best = math.inf
    for j in range(first, n - L):
        den = c[j] - c[j + 1]
        if den <= 0:  # j past K: 0/0, no revenue term to bound
            continue
        best = min(best, (c[j + L] - c[j + 1 + L]) / den)
    return best


def explore_ratio_constant(gammas, n: int, L: int) -> float:
    """``c = min_{1<=j<n-L} (g_{j+L} - g_{j+1+L}) / (g_j - g_{j+1})``; ``inf`` if empty."""
    return _row_ratio_min(np.asarray(gammas, float), 1, n, L)


def truthful_ratio_constant(ctrs, n: int, L: int) -> float:
    """Per-row version: ``min_{i<=min(n,K)} min_{i<=j<n-L}`` of the row ratios."""
    rows = np.atleast_2d(ctrs.entries if isinstance(ctrs, CtrMatrix) else np.asarray(ctrs, float))
    top = min(n, rows.shape[1], rows.shape[0])
    return min((_row_ratio_min(rows[i - 1], i, n, L) for i in range(1, top + 1)), default=math.inf)


def coarse_bound(c: float, n: int, L: int) -> float:
    return 1.0 - min(1.0, c) * (1.0 - 2.0 * L / n)


def cou_bound(gammas, n: int, L: int, R0_top: float, R0: float) -> tuple[float, float, float]:
    """Upper bounds on the cost of uncertainty: ``(c, coarse, refined)``.

    ``refined`` scales the coarse bound by ``R0_top / R0`` where ``R0_top`` is
    the GSP revenue collected from the top ``min(n, K)`` ranks.
    """
    c = explore_ratio_constant(gammas, n, L)
    coarse = coarse_bound(c, n, L)
    return c, coarse, coarse * (R0_top / R0)


def cou_bound_truthful(ctrs, n: int, L: int) -> tuple[float, float]:
    """``(c, bound)`` on the cost of uncertainty under laddered pricing."""
    c = truthful_ratio_constant(ctrs, n, L)
    return c, coarse_bound(c, n, L)


def efficiency(weights, e, v) -> float:
    """``sum_m w_m e_m v_m`` over ranks; pass gamma for GSP, theta for Exp-GSP."""
    w = np.asarray(weights, float)
    m = min(len(w), len(e), len(v))
    return float(np.sum(w[:m] * np.asarray(e, float)[:m] * np.asarray(v, float)[:m]))


def user_experience(weights, e) -> float:
    """Total clickability ``sum_m w_m e_m``."""
    return efficiency(weights, e, np.ones(len(e)))


def y_decomposition(gammas, e, v, n: int, L: int) -> np.ndarray:
    """Per-slot weights ``y_m`` with ``E = sum_m gamma_m y_m``.

    ``y_m`` is the total ``e v`` of the bidders that occupy slot ``m`` over
    the ``n`` steps.
    """
    K = len(gammas)
    size = max(K, n, len(v)) + 2
    ev = _pad(np.asarray(e, float) * np.asarray(v, float), size)
    y = np.empty(K)
    for m in range(1, K + 1):
        if m > n or L == 0:
            y[m - 1] = n * ev[m]
        elif m <= L:
            y[m - 1] = ev[1 : n + 1].sum()
        else:
            y[m - 1] = (n - m + 1) * ev[m - L] + ev[m - L + 1 : m].sum() + (m - L) * ev[m]
    return y


@dataclass(frozen=True)
class EfficiencyBounds:
    E0_explore: float
    E0_non_explore: float
    beta: float
    eta: float
    alpha: float
    omega: float
    bound: float
    ordered_bound: Optional[float]  # None unless e*v is non-increasing over ranks 1..n


def efficiency_loss_bound(gammas, e, v, n: int, L: int) -> EfficiencyBounds:
    """Upper bounds on the per-impression efficiency loss ``(E0 - E/n) / E0``."""
    gammas = np.asarray(gammas, float)
    K = len(gammas)
    size = max(K, n, len(v)) + 2
    g = _pad(gammas, size)
    ev = _pad(np.asarray(e, float) * np.asarray(v, float), size)
    if np.any(ev[1 : n + 1] <= 0):
        raise ValueError("efficiency bounds need e_m v_m > 0 for ranks 1..n")
    E0 = float(np.sum(g[1 : K + 1] * ev[1 : K + 1]))
    E0_e = float(np.sum(g[1 : L + 1] * ev[1 : L + 1]))
    E0_ne = float(np.sum(g[L + 1 : n + 1] * ev[L + 1 : n + 1]))
    avg = ev[1 : n + 1].sum() / n

    beta = avg / ev[1 : L + 1].max() if L >= 1 else 1.0
    eta = 0.0
    for m in range(L + 1, n + 1):
        lo = max(m - L, 1)
        eta = max(eta, float(np.max(1.0 - ev[lo : m + 1] / ev[m])))
    bound = (1.0 - beta) * E0_e / E0 + eta * E0_ne / E0

    alpha = avg / ev[1]
    ratios = [ev[m - 1] / ev[m] - 1.0 for m in range(max(L + 1, 2), n + 1)]
    omega = min(ratios) if ratios else 0.0
    ordered = bool(np.all(np.diff(ev[1 : n + 1]) <= 0))
    ordered_bound = (1.0 - alpha) * E0_e / E0 - (L / n) * omega * E0_ne / E0 if ordered else None
    return EfficiencyBounds(
        E0_e, E0_ne, float(beta), eta, float(alpha), float(omega), float(bound),
        None if ordered_bound is None else float(ordered_bound),
    )


@dataclass(frozen=True)
class MetricsReport:
    R0: float
    R: float
    rho: float
    E0: float
    E: float
    U0: float
    U: float
    n: int

    @property
    def R_per_impression(self) -> float:
        return self.R / self.n

    @property
    def eff_loss(self) -> float:
        return _relative_loss(self.E0, self.E, self.n)

    @property
    def ux_loss(self) -> float:
        return _relative_loss(self.U0, self.U, self.n)


@dataclass(frozen=True)
class BoundsReport:
    c: float
    cou_bound_coarse: float
    cou_bound_refined: float
    R0_top: float
    eff: Optional[EfficiencyBounds] = None


@dataclass(frozen=True)
class Analysis:
    """Everything computed for one instance at one ``(n, L)``."""

    mechanism: str
    n: int
    L: int
    effective: np.ndarray           # theta (separable) or diag of c~ by rank
    min_bids: Optional[BidProfile]
    max_bids: Optional[BidProfile]
    prices: np.ndarray
    metrics: MetricsReport
    bounds: BoundsReport
    rho_max_sne: Optional[float] = None
    extra: dict = field(default_factory=dict)


def analyze_gsp(inst: AuctionInstance, use_estimates: bool = False) -> Analysis:
    """Exp-GSP against GSP at their minimum SNEs (separable CTRs).

    With ``use_estimates`` every quantity is computed from the bidders' own
    value estimates instead of their true values.
    """
    if not inst.separable:
        raise ValueError("GSP equilibria are only computed for separable CTRs")
    n, L = inst.n, inst.L
    gam = inst.curve.as_array()
    e, q = inst.relevances(), inst.qualities()
    v = inst.value_estimates() if use_estimates else inst.values()
    theta = effective_position_ctrs(gam, n, L).thetas

    R0 = expected_revenue(gam, e, q, v)
    R = expected_revenue(theta, e, q, v)
    R0_top = expected_revenue(gam, e, q, v, top=min(n, inst.K))
    rho = cost_of_uncertainty(R0, R, n)
    c, coarse, refined = cou_bound(gam, n, L, R0_top, R0)

    lo = min_sne_bids(theta, v, q)
    hi = max_sne_bids(theta, v, q)
    hi0 = max_sne_bids(gam, v, q)
    R_hi = revenue_at_bids(theta, e, q, hi)
    R0_hi = revenue_at_bids(gam, e, q, hi0)
    rho_hi = cost_of_uncertainty(R0_hi, R_hi, n) if R0_hi > 0 else None

    ev_ok = np.all(e[:n] * v[:n] > 0)
    eff = efficiency_loss_bound(gam, e, v, n, L) if ev_ok else None
    metrics = MetricsReport(
        R0=R0, R=R, rho=rho,
        E0=efficiency(gam, e, v), E=efficiency(theta, e, v),
        U0=user_experience(gam, e), U=user_experience(theta, e),
        n=n,
    )
    return Analysis(
        "exp-gsp" if (n, L) != (1, 0) else "gsp", n, L, theta, lo, hi,
        gsp_prices(lo.bids, q), metrics,
        BoundsReport(c, coarse, refined, R0_top, eff), rho_hi,
    )


def laddered_revenue(eff_ctrs, weights, bids) -> float:
    """``sum_i c~_ii p_i`` under laddered pricing."""
    c = np.asarray(getattr(eff_ctrs, "entries", eff_ctrs), float)
    p = laddered_prices(c, weights, bids)
    m = min(c.shape[0], c.shape[1])
    return float(np.sum(np.diag(c)[:m] * p[:m]))


def analyze_laddered(inst: AuctionInstance, weights=None) -> Analysis:
    """Exp-Laddered against Laddered at truthful bids (any CTR model)."""
    n, L = inst.n, inst.L
    ctr = inst.ctr_matrix().entries
    w = inst.qualities() if weights is None else np.asarray(weights, float)
    v = inst.values()
    eff = effective_ctr_matrix(ctr, n, L).entries
    R0 = laddered_revenue(ctr, w, v)
    R = laddered_revenue(eff, w, v)
    rho = cost_of_uncertainty(R0, R, n)
    c, bound = cou_bound_truthful(ctr, n, L)

    N = inst.N
    one = np.array([ctr[i, i] if i < ctr.shape[1] else 0.0 for i in range(N)])
    many = np.array([eff[i, i] if i < eff.shape[1] else 0.0 for i in range(N)])
    metrics = MetricsReport(
        R0=R0, R=R, rho=rho,
        E0=float(np.sum(one * v)), E=float(np.sum(many * v)),
        U0=float(one.sum()), U=float(many.sum()),
        n=n,
    )
    eff_bounds = None
    if inst.separable and np.all(inst.relevances()[:n] * v[:n] > 0):
        eff_bounds = efficiency_loss_bound(inst.curve.as_array(), inst.relevances(), v, n, L)
    return Analysis(
        "exp-laddered" if (n, L) != (1, 0) else "laddered", n, L, many, None, None,
        laddered_prices(eff, w, v), metrics,
        BoundsReport(c, bound, bound, R0, eff_bounds),
    )
