"""Effective click-through rates accumulated over one n-step phase.

A rank-``m`` bidder visits a sequence of slots over the ``n`` steps; its
effective CTR is the sum of the per-step CTRs. The closed forms below are
checked against :func:`schedule_oracle_effective_ctrs`, which walks the
schedule directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CtrMatrix, PositionCurve, k_tilde
from .mechanisms import AllocationSchedule


@dataclass(frozen=True)
class EffectiveCurve:
    """Separable effective position CTRs ``theta_1..theta_Ktilde``.

    ``explore_share`` is the CTR collected in the explore slots
    (``gamma_1 + ... + gamma_L``) and ``non_explore`` holds ``d_1..d_n``.
    """

    thetas: np.ndarray
    explore_share: float
    non_explore: np.ndarray
    n: int
    L: int

    @property
    def K_tilde(self) -> int:
        return len(self.thetas)

    def __getitem__(self, m: int) -> float:
        """1-based access with ``theta_m = 0`` past ``K_tilde``."""
        return float(self.thetas[m - 1]) if 1 <= m <= len(self.thetas) else 0.0


@dataclass(frozen=True)
class EffectiveCtrMatrix:
    """Per-bidder effective CTRs: ``entries[i, m-1]`` for rank ``m``."""

    entries: np.ndarray
    explore_share: np.ndarray
    non_explore: np.ndarray
    n: int
    L: int

    @property
    def K_tilde(self) -> int:
        return self.entries.shape[1]


def _check_config(K: int, n: int, L: int) -> None:
    if n < 1 or L < 0 or L > K or L > n:
        raise ValueError(f"invalid explore config K={K} n={n} L={L}")


def _d_low(c, m, n, L):
    return (n - L - (m - 1)) * c[:, L + m] + c[:, L + 1 : L + m].sum(axis=1)


def _d_mid(c, m, n, L):
    return (m - L) * c[:, m] + c[:, m + 1 : m + L].sum(axis=1) + (n - m - L + 1) * c[:, m + L]


def _d_high(c, m, n, L):
    return (m - L) * c[:, m] + c[:, m + 1 : n + 1].sum(axis=1)


def _effective_rows(rows: np.ndarray, n: int, L: int):
    """Closed-form effective CTRs for each row of a ``(R, K)`` CTR array."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    R, K = rows.shape
    _check_config(K, n, L)
    kt = k_tilde(K, n)
    # 1-based, zero past K so every branch may index freely
    c = np.zeros((R, kt + L + 2))
    c[:, 1 : K + 1] = rows
    explore = c[:, 1 : L + 1].sum(axis=1)
    d = np.zeros((R, n))
    out = np.zeros((R, kt))
    for m in range(1, kt + 1):
        if m > n:
            out[:, m - 1] = n * c[:, m]
            continue
        if L == 0:
            # no explore slots: the same allocation repeats n times
            dm = n * c[:, m]
        elif m < L:
            dm = _d_low(c, m, n, L)
        elif m <= n - L:
            dm = _d_mid(c, m, n, L)
            if m == L:
                assert np.allclose(dm, _d_low(c, m, n, L), rtol=0, atol=1e-12)
            if m == n - L:
                assert np.allclose(dm, _d_high(c, m, n, L), rtol=0, atol=1e-12)
        else:
            dm = _d_high(c, m, n, L)
        d[:, m - 1] = dm
        out[:, m - 1] = explore + dm
    return out, explore, d


def effective_position_ctrs(curve, n: int, L: int) -> EffectiveCurve:
    """Effective position CTRs ``theta`` for the separable model."""
    gammas = curve.as_array() if isinstance(curve, PositionCurve) else np.asarray(curve, float)
    out, explore, d = _effective_rows(gammas[None, :], n, L)
    return EffectiveCurve(out[0], float(explore[0]), d[0], n, L)


def effective_ctr_matrix(ctrs, n: int, L: int) -> EffectiveCtrMatrix:
    """Effective CTRs ``c~[i, m]`` for a general (non-separable) CTR matrix."""
    c = ctrs.entries if isinstance(ctrs, CtrMatrix) else np.asarray(ctrs, float)
    out, explore, d = _effective_rows(c, n, L)
    return EffectiveCtrMatrix(out, explore, d, n, L)


def theta_differences(curve, n: int, L: int) -> np.ndarray:
    """``theta_j - theta_{j+1}`` for ``j = 1..K_tilde`` straight from gamma."""
    g_in = curve.as_array() if isinstance(curve, PositionCurve) else np.asarray(curve, float)
    K = len(g_in)
    _check_config(K, n, L)
    kt = k_tilde(K, n)
    g = np.zeros(kt + L + 3)
    g[1 : K + 1] = g_in
    explore = g[1 : L + 1].sum()
    out = np.empty(kt)
    for j in range(1, kt + 1):
        if j < L:
            dj = (n - j - L) * (g[j + L] - g[j + 1 + L])
        elif j < n - L:
            dj = (j - L) * (g[j] - g[j + 1]) + (n - j - L) * (g[j + L] - g[j + 1 + L])
        elif j < n:
            dj = (j - L) * (g[j] - g[j + 1])
        elif j == n:
            dj = (explore - L * g[n + 1]) + (n - L) * (g[n] - g[n + 1])
        else:
            dj = n * (g[j] - g[j + 1])
        out[j - 1] = dj
    return out


def check_monotone(values, tol: float = 1e-12) -> bool:
    """True iff ``values`` strictly decrease by more than ``tol`` and end above ``tol``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return False
    return bool(np.all(v[:-1] - v[1:] > tol) and v[-1] > tol)


def schedule_oracle_effective_ctrs(schedule: AllocationSchedule, curve_or_ctrs) -> np.ndarray:
    """Brute-force effective CTRs by walking ``schedule`` step by step.

    Accepts a position curve (returns ``theta`` per rank, length ``N``) or a
    per-bidder CTR array of shape ``(R, K)`` (returns ``(R, N)``: entry
    ``[i, m-1]`` is what row ``i`` would collect at rank ``m``).
    """
    pos = schedule.position_matrix()  # (N, n), 0 = not shown
    if isinstance(curve_or_ctrs, PositionCurve):
        rows = curve_or_ctrs.as_array()[None, :]
        squeeze = True
    elif isinstance(curve_or_ctrs, CtrMatrix):
        rows, squeeze = curve_or_ctrs.entries, False
    else:
        rows = np.asarray(curve_or_ctrs, float)
        squeeze = rows.ndim == 1
        rows = np.atleast_2d(rows)
    padded = np.zeros((rows.shape[0], schedule.K + 1))
    padded[:, 1 : rows.shape[1] + 1] = rows[:, : schedule.K]
    out = padded[:, pos].sum(axis=2)
    return out[0] if squeeze else out
