"""Invariant and oracle checks shared by the CLI and the acceptance tests.

Each check returns a :class:`CheckResult`; sizes are parameters so the CLI
can run a quick pass while the tests run the full configuration.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .convexify import convexify_instance
from .formulation import assemble_relaxation, build_block, constants, lift_arrays
from .geometry import error_bounds, nasty_identities
from .metrics import additional_gap_closed, gap
from .milp.bnb import BnbParams, branch_and_bound
from .oracle import (
    check_projection_equivalence,
    circle_instance,
    grid_optimum,
    random_qcp,
    sample_relaxation,
)
from .refine import RefineParams, solve

SQRT_HALF = math.sqrt(0.5)
EQUIVALENCE_BOXES = ((-1.0, 1.0), (0.0, 3.0), (-2.0, -0.5))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(name, fn) -> CheckResult:
    start = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


def random_boxes(count: int, seed: int, lo: float = -3.0, hi: float = 3.0, min_width: float = 1e-2):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        a, b = np.sort(rng.uniform(lo, hi, 2))
        if b - a >= min_width:
            out.append((float(a), float(b)))
    return out


def check_containment(boxes: int = 100, nus=range(1, 7), samples: int = 100, tol: float = 1e-8, seed: int = 1) -> CheckResult:
    """Curve points lift to feasible points of both relaxations."""

    def run():
        worst = 0.0
        for l, u in random_boxes(boxes, seed):
            x = np.linspace(l, u, samples)
            for nu in nus:
                vals = lift_arrays(x, x * x, l, u, nu)
                for mode in ("D", "Dplus"):
                    worst = max(worst, float(build_block(l, u, nu, mode).violation(vals).max()))
        return worst <= tol, f"max violation {worst:.2e} (tol {tol:g})"

    return _timed("containment", run)


def check_error_bounds(boxes: int = 10, nus=range(2, 7), samples: int = 10_000, tol: float = 1e-8, seed: int = 2) -> CheckResult:
    """Sampled relaxation points stay within both distance bounds."""

    def run():
        worst = -math.inf
        for l, u in list(EQUIVALENCE_BOXES) + random_boxes(boxes, seed, min_width=0.1):
            for nu in nus:
                P = sample_relaxation(l, u, nu, samples)
                sqrt_gap, square_gap = error_bounds(l, u, nu)
                e_sq = np.abs(P[:, 1] - P[:, 0] ** 2).max() - square_gap
                e_rt = np.abs(np.sqrt(np.maximum(P[:, 1], 0.0)) - np.abs(P[:, 0])).max() - sqrt_gap
                worst = max(worst, float(e_sq), float(e_rt))
        return worst <= tol, f"largest (sample error - bound) {worst:.2e} (tol {tol:g})"

    return _timed("error bounds", run)


def check_equivalence(nus=range(1, 5)) -> CheckResult:
    """Fixed-z lifted feasibility matches triangle membership; a corrupted constant is caught."""

    def run():
        bad = []
        for l, u in EQUIVALENCE_BOXES:
            for nu in nus:
                for mode in ("D", "Dplus"):
                    rep = check_projection_equivalence(l, u, nu, mode)
                    if not rep.ok:
                        bad.append((l, u, nu, mode, len(rep.disagreements), len(rep.vertex_failures)))
        C, Cs = constants(-1.0, 1.0, 3)
        mutant = check_projection_equivalence(-1.0, 1.0, 3, "D", C_list=[0.5 * c for c in Cs])
        detail = f"{len(bad)} failing configurations; mutant witnesses {len(mutant.disagreements)}"
        return not bad and not mutant.ok, detail

    return _timed("disjunctive equivalence", run)


def check_identities(draws: int = 1000, tol: float = 1e-10, seed: int = 4) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        ab = rng.uniform(-1.5 * math.pi, 0.5 * math.pi, (draws, 2))
        worst = max(max(abs(r) for r in nasty_identities(a, b)) for a, b in ab)
        return worst <= tol, f"max residual {worst:.2e} (tol {tol:g})"

    return _timed("secant identities", run)


def bracketing_suite(count: int = 20, max_disagreement: float = 0.05) -> list:
    """First ``count`` seeded random instances whose grid oracle is trustworthy.

    An instance is kept when the 0.02 and 0.01 lattices agree within
    ``max_disagreement``; otherwise the 0.01 lattice cannot certify its
    optimum to that accuracy.  The solver plays no part in the selection.
    """
    out, seed = [], 0
    while len(out) < count:
        inst = random_qcp(seed)
        fine = grid_optimum(inst, 0.01)
        coarse = grid_optimum(inst, 0.02)
        if fine.feasible and coarse.feasible and coarse.value - fine.value <= max_disagreement:
            out.append((inst, fine.value))
        seed += 1
    return out


def check_bracketing(count: int = 20, time_limit: float = 60.0, eps_gap: float = 1e-3) -> CheckResult:
    def run():
        failures, slowest = [], 0.0
        for inst, star in bracketing_suite(count):
            t0 = time.perf_counter()
            st = solve(inst, RefineParams(time_limit=time_limit, eps_gap=eps_gap))
            dt = time.perf_counter() - t0
            slowest = max(slowest, dt)
            ok = (
                st.tau_lower - 1e-6 <= star <= st.tau_upper + 0.05
                and st.gap <= 1e-3
                and dt < time_limit
            )
            if not ok:
                failures.append(f"{inst.name}: [{st.tau_lower:.6g}, {st.tau_upper:.6g}] grid {star:.6g} gap {st.gap:.1e} {dt:.1f}s")
        detail = f"{count - len(failures)}/{count} bracketed, slowest {slowest:.1f}s"
        if failures:
            detail += "; " + "; ".join(failures)
        return not failures, detail

    return _timed("oracle bracketing", run)


def check_circle(tol: float = 1e-3) -> CheckResult:
    def run():
        inst = circle_instance()
        st = solve(inst)
        base = branch_and_bound(assemble_relaxation(convexify_instance(inst), (0, 0)))
        lbs = [rec["tau_lower"] for rec in st.log]
        rises = sum(1 for a, b in zip(lbs, lbs[1:]) if b > a + 1e-12)
        ok = (
            abs(st.tau_lower - SQRT_HALF) <= tol
            and abs(st.tau_upper - SQRT_HALF) <= tol
            and abs(base.lower_bound - 0.5) <= 1e-9
            and abs(lbs[0] - 0.5) <= 1e-9
            and rises >= 2
        )
        detail = f"bounds [{st.tau_lower:.6f}, {st.tau_upper:.6f}], nu=0 bound {base.lower_bound:.6f}, {rises} strict increases"
        return ok, detail

    return _timed("circle convergence", run)


def monotone_instances(count: int = 10):
    return [random_qcp(100 + k, n_max=2) for k in range(count)]


def exact_params() -> BnbParams:
    """Near-exact B&B settings for comparing relaxation optima across levels.

    Cut tolerances sit at the LP primal tolerance; anything tighter cannot be
    reached and only burns cut rounds.
    """
    return BnbParams(gap_tol=1e-12, oa_tol=1e-8, feas_tol=1e-8, max_cut_rounds=500)


def check_monotone(count: int = 10, max_nu: int = 4, tol: float = 1e-8) -> CheckResult:
    def run():
        worst = -math.inf
        for inst in monotone_instances(count):
            cinst = convexify_instance(inst)
            prev = -math.inf
            for nu in range(max_nu + 1):
                lb = branch_and_bound(assemble_relaxation(cinst, (nu,) * inst.n), exact_params()).lower_bound
                worst = max(worst, prev - lb)
                prev = lb
        return worst <= tol, f"largest decrease {max(worst, 0.0):.2e} (tol {tol:g})"

    return _timed("monotone refinement", run)


def check_metrics() -> CheckResult:
    def run():
        g = gap(-84.084, -92.768)
        a = additional_gap_closed(-92.768, -93.169, -84.084)
        ok = abs(g - 10.33) <= 0.01 and abs(a - 4.41) <= 0.01
        return ok, f"gap {g:.4f}%, additional gap closed {a:.4f}%"

    return _timed("metric formulas", run)


def check_budget(max_nu: int = 10) -> CheckResult:
    def run():
        bad = []
        for nu in range(max_nu + 1):
            for mode in ("D", "Dplus"):
                blk = build_block(-1.0, 2.0, nu, mode)
                if len(blk.continuous) != 2 + 4 * nu or len(blk.binaries) != nu:
                    bad.append((nu, mode, len(blk.continuous), len(blk.binaries)))
        return not bad, "exact counts" if not bad else f"mismatches {bad}"

    return _timed("variable budget", run)


def run_all(full: bool = False) -> list[CheckResult]:
    """Quick pass by default; ``full`` uses the acceptance sizes."""
    if full:
        return [
            check_containment(),
            check_error_bounds(),
            check_equivalence(),
            check_identities(),
            check_bracketing(),
            check_circle(),
            check_monotone(),
            check_metrics(),
            check_budget(),
        ]
    return [
        check_containment(boxes=10),
        check_error_bounds(boxes=2, samples=2000),
        check_equivalence(),
        check_identities(),
        check_bracketing(count=3),
        check_circle(),
        check_monotone(count=2),
        check_metrics(),
        check_budget(),
    ]
