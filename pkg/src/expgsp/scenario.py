"""Scenario files: a flat TOML document describing an instance and a sweep.

Example::

    mechanism = "exp-gsp"          # gsp | exp-gsp | laddered | exp-laddered
    gamma = [0.6, 0.3, 0.1]        # or: ctr = [[...], [...], ...] (one row per bidder)
    values = [10.0, 6.0, 4.0]
    relevance = [1.0, 1.0, 1.0]
    quality = [1.0, 1.0, 1.0]
    n = [3]                        # sweep values; every (n, L) pair is evaluated
    L = [0, 1]
    phases = 0                     # > 0 enables the click simulation
    seed = 0

Optional keys: ``N``, ``K`` (consistency checks), ``self_estimate``,
``value_estimate``, ``bids``, ``conversion_rate``, ``x_impression``,
``x_click``, ``x_conversion`` (scalar or per-bidder list), ``trials``,
``delta``, ``eps``, ``use_value_estimates``, ``out``.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
import tomli_w

from .core import (AuctionInstance, Bidder, CtrMatrix, ExploreConfig, PositionCurve,
                   is_sne_safe, validate_instance)

MECHANISMS = ("gsp", "exp-gsp", "laddered", "exp-laddered")
Number = Union[int, float]


class ScenarioError(ValueError):
    """A scenario that cannot be turned into valid instances."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass
class Scenario:
    values: list
    gamma: Optional[list] = None
    ctr: Optional[list] = None
    mechanism: str = "exp-gsp"
    relevance: Optional[list] = None
    quality: Optional[list] = None
    self_estimate: Optional[list] = None
    value_estimate: Optional[list] = None
    bids: Optional[list] = None
    conversion_rate: Optional[list] = None
    x_impression: Union[Number, list] = 0.0
    x_click: Union[Number, list] = 0.0
    x_conversion: Union[Number, list] = 0.0
    n: list = field(default_factory=lambda: [1])
    L: list = field(default_factory=lambda: [0])
    N: Optional[int] = None
    K: Optional[int] = None
    phases: int = 0
    trials: int = 0
    delta: float = 0.1
    eps: float = 0.05
    seed: int = 0
    use_value_estimates: bool = False
    out: str = "results"

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ScenarioError(key, "unknown key")
        if "values" not in data:
            raise ScenarioError("values", "missing required key")
        if "gamma" not in data and "ctr" not in data:
            raise ScenarioError("gamma", "missing required key (or give ctr)")
        if "gamma" in data and "ctr" in data:
            raise ScenarioError("gamma", "give either gamma or ctr, not both")
        data = dict(data)
        for key in ("n", "L"):
            if key in data and isinstance(data[key], int):
                data[key] = [data[key]]
        sc = cls(**data)
        sc._check_types()
        return sc

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError("syntax", str(exc)) from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.loads(Path(path).read_text())

    def to_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def _check_types(self) -> None:
        def numbers(key, seq, allow_none=True):
            if seq is None:
                if allow_none:
                    return
                raise ScenarioError(key, "missing")
            if not isinstance(seq, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in seq
            ):
                raise ScenarioError(key, "expected a list of numbers")

        numbers("values", self.values, allow_none=False)
        for key in ("gamma", "relevance", "quality", "self_estimate", "value_estimate",
                    "bids", "conversion_rate"):
            numbers(key, getattr(self, key))
        N = len(self.values)
        for key in ("relevance", "quality", "self_estimate", "value_estimate", "bids",
                    "conversion_rate"):
            seq = getattr(self, key)
            if seq is not None and len(seq) != N:
                raise ScenarioError(key, f"has {len(seq)} entries for {N} bidders")
        for key in ("x_impression", "x_click", "x_conversion"):
            x = getattr(self, key)
            if isinstance(x, list):
                numbers(key, x)
                if len(x) != N:
                    raise ScenarioError(key, f"has {len(x)} entries for {N} bidders")
            elif not isinstance(x, (int, float)) or isinstance(x, bool):
                raise ScenarioError(key, "expected a number or a list of numbers")
        if self.ctr is not None:
            if not isinstance(self.ctr, list) or not all(isinstance(r, list) for r in self.ctr):
                raise ScenarioError("ctr", "expected a list of rows")
            for i, row in enumerate(self.ctr, start=1):
                numbers(f"ctr[{i}]", row)
            if len(self.ctr) != N:
                raise ScenarioError("ctr", f"has {len(self.ctr)} rows for {N} bidders")
            if len({len(r) for r in self.ctr}) != 1:
                raise ScenarioError("ctr", "rows have different lengths")
        for key in ("n", "L"):
            seq = getattr(self, key)
            if not isinstance(seq, list) or not seq or not all(
                isinstance(x, int) and not isinstance(x, bool) for x in seq
            ):
                raise ScenarioError(key, "expected a nonempty list of integers")
        for key in ("N", "K", "phases", "trials", "seed"):
            x = getattr(self, key)
            if x is not None and (not isinstance(x, int) or isinstance(x, bool) or x < 0):
                raise ScenarioError(key, "expected a nonnegative integer")
        if self.seed >= 2**64:
            raise ScenarioError("seed", "must fit in 64 bits")
        for key in ("delta", "eps"):
            x = getattr(self, key)
            if not isinstance(x, (int, float)) or not 0 < x < 1:
                raise ScenarioError(key, "expected a number in (0, 1)")
        if self.mechanism not in MECHANISMS:
            raise ScenarioError("mechanism", f"expected one of {', '.join(MECHANISMS)}")
        if self.N is not None and self.N != N:
            raise ScenarioError("N", f"says {self.N} but values has {N} entries")
        K = len(self.gamma) if self.gamma is not None else len(self.ctr[0])
        if self.K is not None and self.K != K:
            raise ScenarioError("K", f"says {self.K} but the CTRs have {K} slots")

    def sweep(self) -> list[tuple[int, int]]:
        """Every ``(n, L)`` pair, in sweep-index order."""
        return list(itertools.product(self.n, self.L))

    def bidders(self) -> list[Bidder]:
        N = len(self.values)

        def col(seq, i, default=None):
            return default if seq is None else float(seq[i])

        return [
            Bidder(
                index=i + 1,
                value=float(self.values[i]),
                relevance=col(self.relevance, i, 1.0),
                quality=col(self.quality, i, 1.0),
                self_estimate=col(self.self_estimate, i),
                bid=col(self.bids, i),
                value_estimate=col(self.value_estimate, i),
            )
            for i in range(N)
        ]

    def _build(self, n: int, L: int) -> tuple[AuctionInstance, list[str]]:
        curve = PositionCurve(self.gamma if self.gamma is not None else [])
        ctr = CtrMatrix(self.ctr) if self.ctr is not None else None
        inst = AuctionInstance.build(self.bidders(), curve, ExploreConfig(n, L), ctr=ctr)
        return inst, validate_instance(inst).violations

    def check(self) -> None:
        """Reject problems that do not depend on the sweep point."""
        if self.ctr is not None and self.mechanism in ("gsp", "exp-gsp"):
            raise ScenarioError("ctr", "GSP pricing is only supported with separable CTRs (gamma)")
        _, problems = self._build(1, 0)
        if problems:
            key = "gamma" if any(p.startswith("gamma") for p in problems) else "values"
            if self.ctr is not None and any(p.startswith("ctr") for p in problems):
                key = "ctr"
            raise ScenarioError(key, "; ".join(problems))

    def point_problem(self, n: int, L: int) -> Optional[tuple[str, str]]:
        """``(key, reason)`` if ``(n, L)`` cannot be evaluated, else ``None``."""
        if self.mechanism in ("gsp", "laddered") and (n, L) != (1, 0):
            return "mechanism", f"{self.mechanism!r} needs n=1, L=0"
        inst, problems = self._build(n, L)
        if problems:
            key = "L" if all(p.startswith("L=") for p in problems) else "n"
            return key, "; ".join(problems)
        if not is_sne_safe(inst.K, n, L):
            return "L", f"not SNE-safe: need n <= min(K+1, K+L) and L <= (n-1)/2 (K={inst.K})"
        return None

    def plan(self) -> tuple[list[tuple[int, int]], list[tuple[int, int, str, str]]]:
        """Split the sweep into evaluable points and skipped ``(n, L, key, reason)`` entries.

        Raises :class:`ScenarioError` when nothing is left to evaluate.
        """
        self.check()
        points, skipped = [], []
        for n, L in self.sweep():
            bad = self.point_problem(n, L)
            if bad is None:
                points.append((n, L))
            else:
                skipped.append((n, L) + bad)
        if not points:
            n, L, key, why = skipped[0]
            raise ScenarioError(key, f"no evaluable sweep point (first: n={n}, L={L}: {why})")
        return points, skipped

    def instance(self, n: int, L: int) -> AuctionInstance:
        """Build and validate the instance for one sweep point."""
        self.check()
        bad = self.point_problem(n, L)
        if bad is not None:
            raise ScenarioError(bad[0], f"sweep point n={n}, L={L}: {bad[1]}")
        return self._build(n, L)[0]

RUNNING_EXAMPLE = Scenario(
    mechanism="exp-gsp",
    gamma=[0.6, 0.3, 0.1],
    values=[10.0, 6.0, 4.0],
    relevance=[1.0, 1.0, 1.0],
    quality=[1.0, 1.0, 1.0],
    n=[3],
    L=[0, 1],
    phases=0,
    seed=0,
)
