"""Batch runs over a directory of instances with CSV reports."""
from __future__ import annotations

import csv
import math
import os
import time
from dataclasses import dataclass, field, replace

from .instance_io import load
from .metrics import additional_gap_closed, gap
from .refine import RefineParams, solve

COLUMNS = ["name", "n", "m", "status", "tau_lower", "tau_upper", "gap_pct", "iterations", "nodes", "seconds"]
PLOT_COLUMNS = ["name", "k", "seconds", "tau_lower", "tau_upper", "gap_pct"]
INSTANCE_SUFFIXES = (".json", ".boxqp", ".txt", ".in")


@dataclass
class BenchParams:
    refine: RefineParams = field(default_factory=RefineParams)
    negate: bool = False
    out_csv: str = "bench.csv"
    plot_csv: str | None = "bench_plot.csv"
    baseline_csv: str | None = None


def _fmt(v):
    if isinstance(v, float):
        return "" if not math.isfinite(v) else repr(v)
    return v


def _gap_pct(upper: float, lower: float) -> float:
    if not (math.isfinite(upper) and math.isfinite(lower)):
        return math.inf
    if upper == 0:
        return (upper - lower) * 100.0
    return gap(upper, lower)


def instance_files(directory: str) -> list[str]:
    names = sorted(f for f in os.listdir(directory) if f.endswith(INSTANCE_SUFFIXES))
    return [os.path.join(directory, f) for f in names]


def run_bench(directory: str, params: BenchParams | None = None) -> list[dict]:
    """Solve every instance file under ``directory`` and write the reports.

    A failing instance becomes a row with status ``error: ...``.
    """
    params = params or BenchParams()
    rows, plot = [], []
    for path in instance_files(directory):
        name = os.path.splitext(os.path.basename(path))[0]
        start = time.perf_counter()
        try:
            inst = load(path, negate=params.negate)
            state = solve(inst, replace(params.refine, log_stream=None))
        except Exception as exc:  # isolate per-instance failures
            rows.append({"name": name, "n": "", "m": "", "status": f"error: {exc}", "seconds": time.perf_counter() - start})
            continue
        rows.append(
            {
                "name": inst.name or name,
                "n": inst.n,
                "m": inst.m,
                "status": state.status,
                "tau_lower": state.tau_lower,
                "tau_upper": state.tau_upper,
                "gap_pct": _gap_pct(state.tau_upper, state.tau_lower),
                "iterations": state.iterations,
                "nodes": state.nodes,
                "seconds": state.seconds,
            }
        )
        for rec in state.log:
            plot.append(
                {
                    "name": inst.name or name,
                    "k": rec["k"],
                    "seconds": rec["seconds"],
                    "tau_lower": rec["tau_lower"],
                    "tau_upper": rec["tau_upper"],
                    "gap_pct": _gap_pct(rec["tau_upper"], rec["tau_lower"]),
                }
            )
    columns = list(COLUMNS)
    if params.baseline_csv:
        merge_baseline(rows, read_baseline(params.baseline_csv))
        columns += ["baseline_lower", "baseline_upper", "additional_gap_closed"]
    _write(params.out_csv, columns, rows)
    if params.plot_csv:
        _write(params.plot_csv, PLOT_COLUMNS, plot)
    return rows


def _write(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in columns})


def read_baseline(path: str) -> dict[str, tuple[float, float]]:
    """Baseline CSV with columns ``name, lower_bound, upper_bound``."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            lo = float(r["lower_bound"]) if r.get("lower_bound") else -math.inf
            hi = float(r["upper_bound"]) if r.get("upper_bound") else math.inf
            out[r["name"]] = (lo, hi)
    return out


def merge_baseline(rows: list[dict], baseline: dict[str, tuple[float, float]]) -> None:
    """Add baseline bounds and the additional gap closed by our lower bound.

    The value is positive when our lower bound is the better one and
    negative when the baseline's is; blank when undefined.
    """
    for r in rows:
        if r["name"] not in baseline or "tau_lower" not in r:
            continue
        blo, bhi = baseline[r["name"]]
        r["baseline_lower"], r["baseline_upper"] = blo, bhi
        ours = r["tau_lower"]
        best_ub = min(r["tau_upper"], bhi)
        better, worse = max(ours, blo), min(ours, blo)
        try:
            agc = additional_gap_closed(better, worse, best_ub)
        except ValueError:
            continue
        r["additional_gap_closed"] = agc if ours >= blo else -agc
