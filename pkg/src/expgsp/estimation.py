"""Monte Carlo clicks/conversions over exploration phases, and the estimators.

Each phase draws from its own Philox stream (``jumped(phase)``), so a phase's
outcomes depend only on the seed and the phase number.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import AuctionInstance
from .effective_ctr import effective_position_ctrs
from .mechanisms import AllocationSchedule

CSV_COLUMNS = ("phase", "step", "bidder_rank", "slot", "clicked", "converted")


@dataclass(frozen=True)
class ClickLog:
    """Outcomes of ``phases`` repetitions of an ``n``-step schedule.

    ``clicked[p, t, j]`` / ``converted[p, t, j]`` refer to slot ``j+1`` at
    step ``t+1`` of phase ``p+1``; ``ranks[t, j]`` says who sat there (0 if
    nobody).
    """

    ranks: np.ndarray
    clicked: np.ndarray
    converted: np.ndarray
    N: int

    @property
    def phases(self) -> int:
        return self.clicked.shape[0]

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    def _per_rank(self, events: np.ndarray) -> np.ndarray:
        totals = events.sum(axis=0)  # (n, K)
        out = np.zeros(self.N + 1, dtype=np.int64)
        np.add.at(out, self.ranks.ravel(), totals.ravel())
        return out[1:]

    @property
    def clicks(self) -> np.ndarray:
        """``M_i``: total clicks per rank over all phases."""
        return self._per_rank(self.clicked)

    @property
    def conversions(self) -> np.ndarray:
        """``Q_i``: total conversions per rank over all phases."""
        return self._per_rank(self.converted)

    def steps_shown(self) -> np.ndarray:
        """Number of steps per phase in which each rank was displayed."""
        out = np.zeros(self.N + 1, dtype=np.int64)
        np.add.at(out, self.ranks.ravel(), 1)
        return out[1:]

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        n, K = self.ranks.shape
        for p in range(self.phases):
            for t in range(n):
                for j in range(K):
                    r = self.ranks[t, j]
                    if r:
                        w.writerow((p + 1, t + 1, r, j + 1,
                                    int(self.clicked[p, t, j]), int(self.converted[p, t, j])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _slot_probabilities(inst: AuctionInstance, schedule: AllocationSchedule) -> tuple:
    ranks = np.zeros((schedule.n, schedule.K), dtype=int)
    for t, row in enumerate(schedule.slots):
        ranks[t] = [0 if r is None else r for r in row]
    ctr = inst.ctr_matrix().entries  # (N, K) by rank
    probs = np.zeros(ranks.shape)
    shown = ranks > 0
    slot_idx = np.broadcast_to(np.arange(schedule.K), ranks.shape)
    probs[shown] = ctr[ranks[shown] - 1, slot_idx[shown]]
    return ranks, probs


def simulate_phases(
    inst: AuctionInstance,
    schedule: AllocationSchedule,
    phases: int,
    conv_rates: Optional[Sequence[float]] = None,
    seed: int = 0,
) -> ClickLog:
    """Draw clicks (CTR of the occupied slot) and conversions (given a click).

    ``conv_rates`` are per rank; missing means no conversions are tracked.
    """
    if phases < 0:
        raise ValueError("phases must be nonnegative")
    ranks, probs = _slot_probabilities(inst, schedule)
    if np.any((probs < 0) | (probs > 1)):
        raise ValueError("click probabilities must lie in [0, 1]")
    a = np.zeros(inst.N + 1)
    if conv_rates is not None:
        a[1:] = np.asarray(conv_rates, dtype=float)
        if np.any((a < 0) | (a > 1)):
            raise ValueError("conversion rates must lie in [0, 1]")
    conv_p = a[ranks]  # rank 0 -> 0

    base = np.random.Philox(seed)
    clicked = np.empty((phases,) + ranks.shape, dtype=bool)
    converted = np.empty_like(clicked)
    for p in range(phases):
        rng = np.random.Generator(base.jumped(p))
        u = rng.random((2,) + ranks.shape)
        clicked[p] = u[0] < probs
        converted[p] = clicked[p] & (u[1] < conv_p)
    return ClickLog(ranks, clicked, converted, inst.N)


def estimate_relevance(clicks, theta, phases: int = 1):
    """``M_i / (l theta_i)``."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("effective CTR must be positive")
    if phases < 1:
        raise ValueError("need at least one phase")
    out = np.asarray(clicks, dtype=float) / (phases * theta)
    return float(out) if out.ndim == 0 else out


def _check_prob(name: str, x: float) -> None:
    if not (0.0 < x < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {x}")


def phase_bound(delta: float, eps: float, theta: float) -> float:
    """Real-valued phase requirement ``3 ln(2/eps) / (delta^2 theta)``."""
    _check_prob("delta", delta)
    _check_prob("eps", eps)
    if not theta > 0:
        raise ValueError("effective CTR must be positive")
    return 3.0 * math.log(2.0 / eps) / (delta * delta * theta)


def required_phases(delta: float, eps: float, theta: float) -> int:
    """Phases needed to estimate relevance within ``delta`` w.p. ``1 - eps``."""
    return math.ceil(phase_bound(delta, eps, theta))


def confidence_radius(theta: float, eps: float, phases: int = 1) -> float:
    """Additive radius ``sqrt(3 ln(2/eps) / (l theta))`` holding w.p. ``1 - eps``."""
    _check_prob("eps", eps)
    if not theta > 0:
        raise ValueError("effective CTR must be positive")
    if phases < 1:
        raise ValueError("need at least one phase")
    return math.sqrt(3.0 * math.log(2.0 / eps) / (phases * theta))


def estimate_valuation(n, phases, clicks, conversions, x_impression, x_click, x_conversion,
                       theta, f_tilde):
    """Value per click from impression, click and conversion values.

    ``(l n x_I + M x_C + Q x_A) / (l theta f~)``
    """
    theta = np.asarray(theta, dtype=float)
    f_tilde = np.asarray(f_tilde, dtype=float)
    if np.any(theta <= 0) or np.any(f_tilde <= 0):
        raise ValueError("theta and f_tilde must be positive")
    num = (phases * n * np.asarray(x_impression, float)
           + np.asarray(clicks, float) * np.asarray(x_click, float)
           + np.asarray(conversions, float) * np.asarray(x_conversion, float))
    out = num / (phases * theta * f_tilde)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EstimationReport:
    """Per-rank estimates after ``phases`` phases (arrays indexed by rank - 1)."""

    relevance: np.ndarray
    radius: np.ndarray
    valuation: np.ndarray
    f_tilde: np.ndarray
    clicks: np.ndarray
    conversions: np.ndarray
    delta: Optional[float]
    eps: float
    phases: int


def estimation_report(
    inst: AuctionInstance,
    log: ClickLog,
    eps: float = 0.05,
    delta: Optional[float] = None,
    x_impression=0.0,
    x_click=0.0,
    x_conversion=0.0,
) -> EstimationReport:
    """Relevance and value estimates for every rank that has ``theta > 0``.

    The bidder's updated relevance estimate ``f~`` is its own ``e^`` when
    it saw at least one click, else its prior ``f``. Ranks with zero
    effective CTR get ``nan``.
    """
    if not inst.separable:
        raise ValueError("relevance estimation needs the separable CTR model")
    N = inst.N
    theta = np.zeros(N)
    th = effective_position_ctrs(inst.curve, inst.n, inst.L).thetas
    m = min(N, len(th))
    theta[:m] = th[:m]
    M, Q = log.clicks, log.conversions
    l = log.phases
    ok = theta > 0
    e_hat = np.full(N, np.nan)
    radius = np.full(N, np.nan)
    v_hat = np.full(N, np.nan)
    prior = np.array([bd.f for bd in inst.bidders])
    f_tilde = prior.copy()
    if l > 0 and ok.any():
        e_hat[ok] = estimate_relevance(M[ok], theta[ok], l)
        radius[ok] = [confidence_radius(t, eps, l) for t in theta[ok]]
        f_tilde = np.where(ok & (M > 0), e_hat, prior)
        xi, xc, xa = (np.broadcast_to(np.asarray(x, float), (N,)) for x in
                      (x_impression, x_click, x_conversion))
        v_hat[ok] = estimate_valuation(inst.n, l, M[ok], Q[ok], xi[ok], xc[ok], xa[ok],
                                       theta[ok], f_tilde[ok])
    return EstimationReport(e_hat, radius, v_hat, f_tilde, M, Q, delta, eps, l)


@dataclass(frozen=True)
class CoverageResult:
    failure_rate: float
    phases: int
    trials: int
    mean_estimate: float
    degenerate: bool = False


def coverage_test(
    inst: AuctionInstance,
    rank: int,
    delta: float,
    eps: float,
    trials: int,
    seed: int = 0,
    phases: Optional[int] = None,
) -> CoverageResult:
    """Fraction of independent estimations of rank ``rank`` that miss by more than ``delta``.

    Runs ``trials`` independent estimations, each over ``phases`` phases
    (default: :func:`required_phases`). Clicks of one step summed over the
    phases are Binomial, so each trial draws one Binomial per step instead of
    every Bernoulli.
    """
    th = effective_position_ctrs(inst.curve, inst.n, inst.L)
    theta = th[rank]
    l = required_phases(delta, eps, theta) if phases is None else phases
    if trials <= 0:
        return CoverageResult(0.0, l, 0, math.nan, degenerate=True)
    from .mechanisms import build_schedule

    schedule = build_schedule(inst.N, inst.K, inst.n, inst.L)
    e = inst.bidders[rank - 1].relevance
    gam = inst.curve.as_array()
    rng = np.random.Generator(np.random.Philox(seed))
    clicks = np.zeros(trials, dtype=np.int64)
    for slot in schedule.positions(rank):
        if slot is not None:
            clicks += rng.binomial(l, gam[slot - 1] * e, size=trials)
    e_hat = clicks / (l * theta)
    return CoverageResult(float(np.mean(np.abs(e_hat - e) > delta)), l, trials, float(e_hat.mean()))
