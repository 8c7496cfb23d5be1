"""Command line harness: ``expgsp run | init | verify``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .equilibrium import analyze_gsp, analyze_laddered, verify_sne
from .estimation import coverage_test, estimation_report, simulate_phases
from .mechanisms import build_schedule
from .scenario import RUNNING_EXAMPLE, Scenario, ScenarioError

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

COLUMNS = (
    "n", "L", "R0", "R", "R_per_impression", "rho", "c", "cou_bound_coarse",
    "cou_bound_refined", "E0", "E", "eff_loss", "eff_bound", "ordered_eff_bound", "U0", "U",
)

# family -> (series, column); actual and bound series of a family share the family key
PLOT_SERIES = {
    "cost_of_uncertainty": (("actual", "rho"), ("bound_coarse", "cou_bound_coarse"),
                            ("bound_refined", "cou_bound_refined")),
    "efficiency_loss": (("actual", "eff_loss"), ("bound", "eff_bound"),
                        ("bound_ordered", "ordered_eff_bound")),
    "user_experience_loss": (("actual", "ux_loss"),),
    "revenue_per_impression": (("gsp", "R0"), ("explore", "R_per_impression")),
}


def fmt(x) -> str:
    """12 significant digits, locale-free; blanks for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def evaluate_point(sc: Scenario, index: int, n: int, L: int, seed: int) -> tuple[dict, dict]:
    """Metrics for one sweep point: a CSV row and a JSON summary entry."""
    inst = sc.instance(n, L)
    if sc.mechanism in ("gsp", "exp-gsp"):
        a = analyze_gsp(inst, use_estimates=sc.use_value_estimates)
    else:
        a = analyze_laddered(inst)
    m, b = a.metrics, a.bounds
    eff = b.eff
    row = {
        "n": n, "L": L, "R0": m.R0, "R": m.R, "R_per_impression": m.R_per_impression,
        "rho": m.rho, "c": b.c, "cou_bound_coarse": b.cou_bound_coarse,
        "cou_bound_refined": b.cou_bound_refined, "E0": m.E0, "E": m.E,
        "eff_loss": m.eff_loss,
        "eff_bound": eff.bound if eff else None,
        "ordered_eff_bound": eff.ordered_bound if eff else None,
        "U0": m.U0, "U": m.U, "ux_loss": m.ux_loss,
    }
    ids = [bd.index for bd in inst.bidders]
    summary = {
        "index": index, "n": n, "L": L, "mechanism": a.mechanism,
        "ranked_ids": ids, "effective_ctr": a.effective, "prices": a.prices,
        "metrics": {k: row[k] for k in COLUMNS[2:]},
    }
    if a.min_bids is not None:
        v = inst.value_estimates() if sc.use_value_estimates else inst.values()
        q = inst.qualities()
        summary["min_sne_bids"] = a.min_bids.bids
        summary["max_sne_bids"] = a.max_bids.bids
        summary["sne_verified"] = bool(verify_sne(a.min_bids, a.effective, v, q)
                                       and verify_sne(a.max_bids, a.effective, v, q))
        summary["rho_max_sne"] = a.rho_max_sne
    if eff is not None:
        summary["efficiency_bound_terms"] = {
            "alpha": eff.alpha, "beta": eff.beta, "eta": eff.eta, "omega": eff.omega,
            "E0_explore": eff.E0_explore, "E0_non_explore": eff.E0_non_explore,
        }
        summary["R0_top"] = b.R0_top

    if sc.phases > 0 and inst.separable:
        schedule = build_schedule(inst.N, inst.K, n, L)
        conv = None
        if sc.conversion_rate is not None:
            by_id = {i + 1: r for i, r in enumerate(sc.conversion_rate)}
            conv = [by_id[i] for i in ids]

        def by_rank(x):
            return [x[i - 1] for i in ids] if isinstance(x, list) else x

        ss = np.random.SeedSequence([seed, index])
        log = simulate_phases(inst, schedule, sc.phases, conv, seed=ss)
        rep = estimation_report(inst, log, eps=sc.eps, delta=sc.delta,
                                x_impression=by_rank(sc.x_impression),
                                x_click=by_rank(sc.x_click),
                                x_conversion=by_rank(sc.x_conversion))
        for r in range(inst.N):
            row[f"e_hat_{r + 1}"] = rep.relevance[r]
            row[f"radius_{r + 1}"] = rep.radius[r]
            row[f"v_hat_{r + 1}"] = rep.valuation[r]
        summary["estimation"] = {
            "phases": sc.phases, "clicks": rep.clicks, "conversions": rep.conversions,
            "relevance": rep.relevance, "radius": rep.radius, "valuation": rep.valuation,
        }
        if sc.trials > 0:
            rates = []
            for r in range(1, min(inst.N, inst.K_tilde) + 1):
                cov = coverage_test(inst, r, sc.delta, sc.eps, sc.trials,
                                    seed=np.random.SeedSequence([seed, index, r]))
                row[f"coverage_fail_{r}"] = cov.failure_rate
                rates.append({"rank": r, "phases": cov.phases, "failure_rate": cov.failure_rate})
            summary["coverage"] = rates
    return row, summary


def write_results_csv(rows: Sequence[dict], fh) -> None:
    extra = []
    for r in rows:
        for k in r:
            if k not in COLUMNS and k != "ux_loss" and k not in extra:
                extra.append(k)
    w = csv.writer(fh, lineterminator="\n")
    header = list(COLUMNS) + extra
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(r.get(k)) for k in header])


def emit_plot_data(rows: Sequence[dict], fh, series: Optional[dict] = None) -> None:
    """Long-format ``n, L, family, series, value`` table for overlay plots."""
    series = PLOT_SERIES if series is None else series
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("n", "L", "family", "series", "value"))
    for r in rows:
        for family, items in series.items():
            for name, col in items:
                if r.get(col) is not None:
                    w.writerow((r["n"], r["L"], family, name, fmt(r[col])))


def run_scenario(path, out: Optional[str] = None, seed: Optional[int] = None,
                 threads: int = 1, stderr=None) -> int:
    """Evaluate every sweep point of a scenario and write CSV/JSON results."""
    stderr = stderr or sys.stderr
    try:
        sc = Scenario.load(path)
        points, skipped = sc.plan()
    except (ScenarioError, OSError) as exc:
        print(f"{path}: {exc}", file=stderr)
        return EXIT_INVALID
    for n, L, key, why in skipped:
        print(f"{path}: skipping n={n}, L={L} ({key}: {why})", file=stderr)
    seed = sc.seed if seed is None else seed
    outdir = Path(out if out is not None else sc.out)
    # seeds follow the position in the full sweep, so skipping a point never shifts another's
    full = sc.sweep()
    jobs = [(full.index(p), *p) for p in points]

    def job(args):
        with np.errstate(divide="raise", invalid="raise"):
            return evaluate_point(sc, *args, seed)

    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(job, jobs))
        else:
            results = [job(a) for a in jobs]
    except (ValueError, ArithmeticError, FloatingPointError) as exc:
        print(f"{path}: numeric error: {exc}", file=stderr)
        return EXIT_NUMERIC
    rows = [r for r, _ in results]
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "results.csv", "w", newline="") as fh:
        write_results_csv(rows, fh)
    with open(outdir / "plot_data.csv", "w", newline="") as fh:
        emit_plot_data(rows, fh)
    summary = {
        "scenario": sc.to_dict(), "seed": seed, "points": [s for _, s in results],
        "skipped": [{"n": n, "L": L, "key": key, "reason": why} for n, L, key, why in skipped],
    }
    with open(outdir / "summary.json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def verify_scenario(path, stdout=None, stderr=None) -> int:
    stdout, stderr = stdout or sys.stdout, stderr or sys.stderr
    try:
        sc = Scenario.load(path)
        points, skipped = sc.plan()
    except (ScenarioError, OSError) as exc:
        print(f"{path}: {exc}", file=stderr)
        return EXIT_INVALID
    for n, L, key, why in skipped:
        print(f"{path}: n={n}, L={L} will be skipped ({key}: {why})", file=stdout)
    print(f"{path}: ok ({len(points)} evaluable sweep points)", file=stdout)
    return EXIT_OK


def main(argv: Optional[Iterable[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="expgsp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate a scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--threads", type=int, default=1)

    p_init = sub.add_parser("init", help="write an example scenario")
    p_init.add_argument("--example", required=True, metavar="PATH")

    p_verify = sub.add_parser("verify", help="validate a scenario without running it")
    p_verify.add_argument("scenario")

    args = parser.parse_args(None if argv is None else list(argv))
    if args.command == "run":
        if args.seed is not None and not 0 <= args.seed < 2**64:
            print("--seed must be an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_INVALID
        return run_scenario(args.scenario, args.out, args.seed, max(1, args.threads))
    if args.command == "init":
        Path(args.example).write_text(RUNNING_EXAMPLE.dumps())
        return EXIT_OK
    return verify_scenario(args.scenario)


if __name__ == "__main__":
    sys.exit(main())
