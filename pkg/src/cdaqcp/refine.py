"""Adaptive refinement loop: solve the relaxation, score, refine, repeat.

Lower bounds come from exact branch-and-bound on the current relaxation;
upper bounds come from a local search started at each relaxation optimum.
The refinement level of a variable grows only where the relaxation
solution sits far from the curve y = x**2.
"""
from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
from scipy.optimize import minimize

from .convexify import convexify_instance
from .formulation import assemble_relaxation
from .instance_io import QcpInstance, eliminate_fixed
from .milp.bnb import BnbParams, MilpStatus, branch_and_bound

NU_CAP = 24
FEAS_TOL = 1e-6


@dataclass
class RefineParams:
    T: int = 20
    eps_viol: float = 1e-5
    eps_gap: float = 1e-4
    time_limit: float = math.inf
    node_limit: int = 100_000
    mode: str | None = None
    paper_exact_diagonal: bool = False
    max_iterations: int = 1000
    log_stream: TextIO | None = None
    node_log: TextIO | None = None

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if not (self.eps_viol > 0 and self.eps_gap > 0):
            raise ValueError("eps_viol and eps_gap must be positive")


@dataclass
class SolveState:
    status: str = "running"
    tau_lower: float = -math.inf
    tau_upper: float = math.inf
    nu: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    incumbent: np.ndarray | None = None
    log: list = field(default_factory=list)
    nodes: int = 0
    seconds: float = 0.0
    limit_hit: bool = False

    @property
    def iterations(self) -> int:
        return len(self.log)

    @property
    def gap(self) -> float:
        return relative_gap(self.tau_upper, self.tau_lower)


def relative_gap(upper: float, lower: float) -> float:
    if not (math.isfinite(upper) and math.isfinite(lower)):
        return math.inf
    return (upper - lower) / max(1.0, abs(upper))


def violation_scores(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have equal lengths")
    return np.abs(y - x * x)


@dataclass
class LocalResult:
    x: np.ndarray
    value: float


def _penalty(inst: QcpInstance, x: np.ndarray, rho: float) -> tuple[float, np.ndarray]:
    val = inst.objective(x)
    grad = 2.0 * inst.Q[0] @ x + inst.c[0]
    for i in range(1, inst.m + 1):
        g = inst.quad_value(i, x) - inst.rhs[i - 1]
        if g > 0:
            val += rho * g
            grad = grad + rho * (2.0 * inst.Q[i] @ x + inst.c[i])
    return val, grad


def _projected_gradient(inst: QcpInstance, x: np.ndarray, max_iter: int = 500) -> np.ndarray:
    lo, hi = inst.lower, inst.upper
    rho = 10.0
    it = 0
    while it < max_iter:
        val, grad = _penalty(inst, x, rho)
        step = 1.0
        moved = False
        while step > 1e-12:
            cand = np.clip(x - step * grad, lo, hi)
            d = cand - x
            if not np.any(d):
                break
            cval, _ = _penalty(inst, cand, rho)
            if cval <= val + 1e-4 * grad @ d:
                x, moved = cand, True
                break
            step *= 0.5
        it += 1
        if not moved:
            if inst.max_violation(x) <= FEAS_TOL or rho >= 1e6:
                break
            rho = min(2.0 * rho, 1e6)
        elif inst.max_violation(x) > FEAS_TOL and rho < 1e6:
            rho = min(2.0 * rho, 1e6)
    return x


def _polish(inst: QcpInstance, x: np.ndarray) -> np.ndarray:
    cons = []
    for i in range(1, inst.m + 1):
        cons.append(
            {
                "type": "ineq",
                "fun": lambda v, i=i: inst.rhs[i - 1] - inst.quad_value(i, v),
                "jac": lambda v, i=i: -(2.0 * inst.Q[i] @ v + inst.c[i]),
            }
        )
    with warnings.catch_warnings():
        # SLSQP may step marginally outside the bounds; the result is clipped below
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            inst.objective,
            x,
            jac=lambda v: 2.0 * inst.Q[0] @ v + inst.c[0],
            bounds=list(zip(inst.lower, inst.upper)),
            constraints=cons,
            method="SLSQP",
            options={"maxiter": 200, "ftol": 1e-12},
        )
    return np.clip(res.x, inst.lower, inst.upper)


def local_search(inst: QcpInstance, x0) -> LocalResult | None:
    """Feasible point near ``x0`` or None.

    Penalty projected gradient with Armijo steps, then an SLSQP polish.  The
    best feasible candidate (``x0`` included) wins; ties keep the earlier one.
    """
    x0 = np.clip(np.asarray(x0, dtype=float), inst.lower, inst.upper)
    candidates = [x0]
    x = _projected_gradient(inst, x0.copy())
    candidates.append(x)
    try:
        candidates.append(_polish(inst, x))
    except (ValueError, np.linalg.LinAlgError):
        pass
    best = None
    for cand in candidates:
        if not np.all(np.isfinite(cand)) or inst.max_violation(cand) > FEAS_TOL:
            continue
        val = inst.objective(cand)
        if best is None or val < best.value - 1e-12:
            best = LocalResult(cand.copy(), val)
    return best


def select_refinements(scores: np.ndarray, eligible: np.ndarray, T: int, eps_viol: float) -> list[int]:
    """Indices of the T largest eligible scores above ``eps_viol``; ties to the lower index."""
    order = np.argsort(-scores, kind="stable")
    picked = [int(j) for j in order if eligible[j] and scores[j] > eps_viol]
    return sorted(picked[:T])


def solve(inst: QcpInstance, params: RefineParams | None = None) -> SolveState:
    params = params or RefineParams()
    start = time.perf_counter()
    red, back = eliminate_fixed(inst)
    state = SolveState(nu=np.zeros(red.n, dtype=int))

    def finish(status: str) -> SolveState:
        state.status = status
        state.seconds = time.perf_counter() - start
        return state

    def offer(x_red: np.ndarray) -> None:
        found = local_search(red, x_red)
        if found is not None and found.value < state.tau_upper:
            state.tau_upper = found.value
            state.incumbent = back.restore(found.x)

    if red.n == 0:
        x = np.zeros(0)
        if red.max_violation(x) > FEAS_TOL:
            state.tau_lower = math.inf
            return finish("infeasible")
        state.tau_lower = state.tau_upper = red.objective(x)
        state.incumbent = back.restore(x)
        return finish("optimal")

    cinst = convexify_instance(red, params.paper_exact_diagonal)
    offer(0.5 * (red.lower + red.upper))
    coupled = cinst.coupled
    mode = params.mode or "auto"

    for k in range(1, params.max_iterations + 1):
        remaining = params.time_limit - (time.perf_counter() - start)
        if remaining <= 0:
            state.limit_hit = True
            return finish("time_limit")
        model = assemble_relaxation(cinst, state.nu, mode)
        # nodes whose bound already meets the outer gap test need no further work
        cutoff = state.tau_upper - 0.5 * params.eps_gap * max(1.0, abs(state.tau_upper))
        bnb = BnbParams(
            gap_tol=params.eps_gap / 10,
            node_limit=params.node_limit,
            time_limit=remaining,
            cutoff=cutoff,
            node_log=params.node_log,
        )
        res = branch_and_bound(model, bnb)
        state.nodes += res.node_count
        if res.status == MilpStatus.INFEASIBLE:
            state.tau_lower = math.inf
            _emit(state, params, k, [], res.node_count, start)
            return finish("infeasible")
        state.tau_lower = max(state.tau_lower, min(res.lower_bound, state.tau_upper))
        refined: list[int] = []
        point = res.incumbent if res.incumbent is not None else res.point
        if point is not None:
            x, y = point[model.x_index], point[model.y_index]
            offer(x)
            scores = np.where(coupled, violation_scores(x, y), 0.0)
            if relative_gap(state.tau_upper, state.tau_lower) > params.eps_gap:
                refined = select_refinements(scores, state.nu < NU_CAP, params.T, params.eps_viol)
        state.tau_lower = min(state.tau_lower, state.tau_upper)
        _emit(state, params, k, refined, res.node_count, start)
        if res.status in (MilpStatus.TIME_LIMIT, MilpStatus.NODE_LIMIT):
            state.limit_hit = True
            return finish(res.status.value)
        if relative_gap(state.tau_upper, state.tau_lower) <= params.eps_gap:
            return finish("optimal")
        if not refined:
            return finish("no_refinement")
        state.nu[refined] += 1
    state.limit_hit = True
    return finish("iteration_limit")


def _emit(state: SolveState, params: RefineParams, k: int, refined: list[int], nodes: int, start: float) -> None:
    entry = {
        "k": k,
        "tau_lower": state.tau_lower,
        "tau_upper": state.tau_upper,
        "gap": state.gap,
        "refined_indices": refined,
        "nodes": nodes,
        "seconds": round(time.perf_counter() - start, 6),
    }
    state.log.append(entry)
    if params.log_stream is not None:
        params.log_stream.write(json.dumps(_jsonable(entry)) + "\n")
        params.log_stream.flush()


def _jsonable(entry: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in entry.items()}
