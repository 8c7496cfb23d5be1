"""Independent reference implementations used to derive frozen test values.

These deliberately avoid the package: schedules are rebuilt from the
rotation rule with a deque, and arithmetic is exact (``Fraction``).
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction


def rotation_schedule(N: int, K: int, n: int, L: int) -> list[list]:
    """``steps[t][j]`` = rank (1-based) in slot ``j+1`` at step ``t+1``, or None."""
    top = deque(range(1, n + 1))
    steps = []
    for _ in range(n):
        explore = list(top)[:L]
        rest = [r for r in range(1, N + 1) if r not in explore]
        row = (explore + rest)[:K]
        steps.append(row + [None] * (K - len(row)))
        top.rotate(-1)
    return steps


def brute_effective(ctr_rows, N: int, n: int, L: int) -> list[list[Fraction]]:
    """For each CTR row, what a bidder would collect at each rank 1..N over one phase."""
    K = len(ctr_rows[0])
    steps = rotation_schedule(N, K, n, L)
    out = []
    for row in ctr_rows:
        row = [Fraction(x) for x in row]
        acc = [Fraction(0)] * N
        for step in steps:
            for j, rank in enumerate(step):
                if rank is not None:
                    acc[rank - 1] += row[j]
        out.append(acc)
    return out


def gsp_revenue_at(theta, e, q, bids) -> Fraction:
    """``sum_i theta_i e_i q_{i+1} b_{i+1} / q_i`` in exact arithmetic."""
    N = len(bids)
    total = Fraction(0)
    for i in range(min(len(theta), N)):
        nxt = Fraction(q[i + 1]) * Fraction(bids[i + 1]) / Fraction(q[i]) if i + 1 < N else 0
        total += Fraction(theta[i]) * Fraction(e[i]) * nxt
    return total


def min_sne_exact(theta, v, q) -> list[Fraction]:
    """Back-substitute ``theta_i q_{i+1} b_{i+1} = sum_{j>=i} (theta_j - theta_{j+1}) q_{j+1} v_{j+1}``."""
    N = len(v)
    th = [Fraction(x) for x in theta] + [Fraction(0)] * (N + 2)
    vv = [Fraction(x) for x in v] + [Fraction(0)] * 2
    qq = [Fraction(x) for x in q] + [Fraction(1)] * 2
    b = list(vv[:N])
    for i in range(N - 1):
        if th[i] == 0:
            break
        s = sum((th[j] - th[j + 1]) * qq[j + 1] * vv[j + 1] for j in range(i, N))
        b[i + 1] = s / (th[i] * qq[i + 1])
    return b
