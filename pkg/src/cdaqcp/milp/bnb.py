"""LP-based branch-and-bound with lazy outer-approximation cuts.

Solves the mixed-binary convex models produced by
:func:`cdaqcp.formulation.assemble_relaxation`.  The quadratic part of the
objective is moved into an epigraph column ``t``; ``t >= q(x)``, the
quadratic constraint rows and any ``y >= x**2`` rows are enforced by
gradient cuts added whenever an LP optimum violates them.  All cuts are
globally valid, so they live in one shared LP and every node sees them.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, TextIO

import numpy as np

from ..formulation import LinearRow, QuadRow, RelaxModel
from .simplex import DualSimplex, LpStatus

log = logging.getLogger(__name__)


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"
    TIME_LIMIT = "time_limit"
    CUTOFF = "cutoff"


@dataclass
class BnbParams:
    gap_tol: float = 1e-6
    node_limit: int = 100_000
    time_limit: float = math.inf
    oa_tol: float = 1e-7
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    max_cut_rounds: int = 200
    frac_cut_rounds: int = 1
    dive_every: int = 8
    cut_pool: int = 50
    restore_basis: bool = True
    cutoff: float = math.inf
    node_log: TextIO | None = None
    callback: Callable[[dict], None] | None = None


@dataclass
class MilpResult:
    status: MilpStatus
    lower_bound: float
    incumbent: np.ndarray | None
    incumbent_value: float
    node_count: int
    cut_count: int
    point: np.ndarray | None = None
    seconds: float = 0.0


def quad_value(row: QuadRow, v: np.ndarray) -> float:
    sub = v[list(row.index)]
    g = float(sub @ row.matrix @ sub)
    for k, c in row.linear.items():
        g += c * v[k]
    return g


def oa_cut(row: QuadRow, point: np.ndarray) -> LinearRow:
    """Gradient linearization of ``row`` at ``point``; valid where the row holds."""
    point = np.asarray(point, dtype=float)
    idx = list(row.index)
    sub = point[idx]
    grad = 2.0 * (row.matrix @ sub)
    coeffs: dict[int, float] = {}
    for k, g in zip(idx, grad):
        if g != 0.0:
            coeffs[k] = coeffs.get(k, 0.0) + float(g)
    for k, c in row.linear.items():
        coeffs[k] = coeffs.get(k, 0.0) + float(c)
    # q(p) + grad'(x - p) = grad'x - p'Pp + lin'x
    return LinearRow(coeffs, "<=", float(row.rhs + sub @ row.matrix @ sub), f"oa[{row.label}]")


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    depth: int = field(compare=False)
    lo: np.ndarray = field(compare=False, repr=False)
    hi: np.ndarray = field(compare=False, repr=False)
    point: np.ndarray | None = field(compare=False, default=None, repr=False)
    basis: tuple | None = field(compare=False, default=None, repr=False)
    done: bool = field(compare=False, default=False)


class _Engine:
    def __init__(self, model: RelaxModel, params: BnbParams):
        self.model = model
        self.params = params
        ncol = model.n_cols
        quad = list(model.quad_rows)
        c = model.objective_linear.copy()
        lo, hi = model.lower.copy(), model.upper.copy()
        P = model.objective_matrix
        self.has_t = bool(P.size and np.any(P))
        if self.has_t:
            idx = list(model.objective_index)
            ax = np.maximum(np.abs(lo[idx]), np.abs(hi[idx]))
            t_hi = float(np.abs(P) @ ax @ ax) + 1.0
            t = ncol
            ncol += 1
            c = np.append(c, 1.0)
            lo = np.append(lo, 0.0)
            hi = np.append(hi, t_hi)
            quad.append(QuadRow(model.objective_index, P, {t: -1.0}, 0.0, "objective"))
        self.ncol = ncol
        self.quad = quad
        self.binary = np.flatnonzero(np.append(model.binary, False) if self.has_t else model.binary)
        A = np.zeros((len(model.rows), ncol))
        rlo = np.full(len(model.rows), -np.inf)
        rhi = np.empty(len(model.rows))
        for r, row in enumerate(model.rows):
            for k, v in row.coeffs.items():
                A[r, k] += v
            rhi[r] = row.rhs
            if row.sense == "==":
                rlo[r] = row.rhs
        self.lp = DualSimplex(c, A, rlo, rhi, lo, hi)
        self.base_rows = len(model.rows)
        self.root_lo, self.root_hi = lo, hi
        self.cut_count = 0
        self._seed_cuts()

    def _seed_cuts(self) -> None:
        # tangents of one-dimensional rows x**2 - y <= 0 at both ends and the middle
        cuts = []
        for q in self.quad:
            if len(q.index) == 1 and q.label.endswith("y>=x^2"):
                k = q.index[0]
                for p in np.linspace(self.root_lo[k], self.root_hi[k], 3):
                    v = np.zeros(self.ncol)
                    v[k] = p
                    cuts.append(oa_cut(q, v))
        self._add_cuts(cuts)

    def _add_cuts(self, cuts: list[LinearRow]) -> None:
        if not cuts:
            return
        A = np.zeros((len(cuts), self.ncol))
        for r, cut in enumerate(cuts):
            for k, v in cut.coeffs.items():
                A[r, k] += v
        rhs = np.array([cut.rhs for cut in cuts])
        self.lp.add_rows(A, np.full(len(cuts), -np.inf), rhs)
        self.cut_count += len(cuts)

    def _purge(self) -> None:
        """Drop cuts that are slack at the last LP optimum once the pool is large."""
        lp = self.lp
        live = lp.m - self.base_rows
        if live <= self.params.cut_pool or getattr(lp, "x", None) is None or lp.x.size != lp.n + lp.m:
            return
        rows = np.arange(self.base_rows, lp.m)
        slack = lp.n + rows
        basic = np.isin(slack, lp.basic)
        loose = lp.x[slack] < lp.hi[slack] - 1e-6 * (1.0 + np.abs(lp.hi[slack]))
        lp.remove_rows(rows[basic & loose])

    def violations(self, v: np.ndarray) -> np.ndarray:
        return np.array([quad_value(q, v) - q.rhs for q in self.quad])

    def evaluate(self, node: _Node) -> tuple[str, float, np.ndarray | None]:
        """Solve a node's LP with cut rounds; returns (state, bound, point)."""
        lp = self.lp
        self._purge()
        lp.set_col_bounds(node.lo, node.hi)
        if self.params.restore_basis and node.basis is not None:
            lp.set_basis(node.basis)
        const = self.model.objective_constant
        rounds = 0
        while True:
            status = lp.solve()
            if status == LpStatus.NUMERICAL:
                log.debug("numerical trouble at node %d; restarting from the slack basis", node.seq)
                lp.reset_basis()
                status = lp.solve()
            if status == LpStatus.INFEASIBLE:
                return "infeasible", math.inf, None
            if status != LpStatus.OPTIMAL:
                raise RuntimeError(f"LP solve failed at node {node.seq}: {status.value}")
            v = lp.solution
            bound = lp.value + const
            if bound >= self._fathom_level():
                return "fathomed", bound, v
            viol = self.violations(v) if self.quad else np.zeros(0)
            frac = self._fractionality(v)
            limit = self.params.max_cut_rounds if frac <= self.params.int_tol else self.params.frac_cut_rounds
            bad = np.flatnonzero(viol > self.params.oa_tol)
            if bad.size == 0 or rounds >= limit:
                break
            self._add_cuts([oa_cut(self.quad[i], v) for i in bad])
            rounds += 1
        node.basis = lp.get_basis()
        if frac > self.params.int_tol:
            return "fractional", bound, v
        if viol.size == 0 or viol.max() <= self.params.feas_tol:
            return "integral", bound, v
        return "stalled", bound, v

    def _fractionality(self, v: np.ndarray) -> float:
        if self.binary.size == 0:
            return 0.0
        z = v[self.binary]
        return float(np.max(np.minimum(z - np.floor(z), np.ceil(z) - z)))

    def incumbent_level(self) -> float:
        if self.incumbent_value == math.inf:
            return math.inf
        return self.incumbent_value - self.params.gap_tol * max(1.0, abs(self.incumbent_value))

    def _fathom_level(self) -> float:
        return min(self.incumbent_level(), self.params.cutoff)

    def run(self) -> MilpResult:
        p = self.params
        start = time.perf_counter()
        self.incumbent = None
        self.incumbent_value = math.inf
        seq = itertools.count()
        root = _Node(-math.inf, next(seq), 0, self.root_lo.copy(), self.root_hi.copy())
        heap = [root]
        closed_min = math.inf  # smallest bound among nodes dropped by a bound test
        stalled_min = math.inf
        count = 0
        dive_pick: _Node | None = None
        status = None

        def open_min() -> float:
            while heap and heap[0].done:
                heapq.heappop(heap)
            return heap[0].bound if heap else math.inf

        while True:
            best_open = open_min()
            if not heap:
                break
            if count >= p.node_limit:
                status = MilpStatus.NODE_LIMIT
                break
            if time.perf_counter() - start > p.time_limit:
                status = MilpStatus.TIME_LIMIT
                break
            if best_open >= self._fathom_level():
                closed_min = min(closed_min, best_open)
                for nd in heap:
                    if not nd.done:
                        nd.done = True
                heap.clear()
                break
            if dive_pick is not None and not dive_pick.done and count % p.dive_every == 0:
                node = dive_pick
            else:
                node = heapq.heappop(heap)
            dive_pick = None
            node.done = True
            count += 1
            state, bound, v = self.evaluate(node)
            bound = max(bound, node.bound)
            if state == "infeasible":
                pass
            elif state == "fathomed":
                closed_min = min(closed_min, bound)
            elif state == "integral":
                if bound < self.incumbent_value:
                    self.incumbent_value = bound
                    self.incumbent = v
                closed_min = min(closed_min, bound)
            elif state == "stalled" and self._fractionality(v) <= p.int_tol:
                stalled_min = min(stalled_min, bound)
            else:
                j = self._branch_column(v)
                for val in (0.0, 1.0):
                    lo, hi = node.lo.copy(), node.hi.copy()
                    lo[j] = hi[j] = val
                    child = _Node(bound, next(seq), node.depth + 1, lo, hi, v, node.basis)
                    heapq.heappush(heap, child)
                    if (val == 1.0) == (v[j] >= 0.5):
                        dive_pick = child
            if p.node_log is not None:
                p.node_log.write(f"{node.seq} {node.depth} {bound:.10g} {state}\n")
            if p.callback is not None:
                lb = min(open_min(), self.incumbent_value, closed_min, stalled_min)
                p.callback({"node_count": count, "lower_bound": lb, "incumbent_value": self.incumbent_value})

        lower = min(open_min(), self.incumbent_value, closed_min, stalled_min)
        if status is None:
            if self.incumbent is not None:
                status = MilpStatus.OPTIMAL
            elif closed_min < math.inf or stalled_min < math.inf:
                status = MilpStatus.CUTOFF
            else:
                status = MilpStatus.INFEASIBLE
        point = self.incumbent
        if point is None:
            live = [nd for nd in heap if not nd.done and nd.point is not None]
            if live:
                point = min(live).point
        ncol = self.model.n_cols
        return MilpResult(
            status=status,
            lower_bound=lower,
            incumbent=None if self.incumbent is None else self.incumbent[:ncol],
            incumbent_value=self.incumbent_value,
            node_count=count,
            cut_count=self.cut_count,
            point=None if point is None else point[:ncol],
            seconds=time.perf_counter() - start,
        )

    def _branch_column(self, v: np.ndarray) -> int:
        z = v[self.binary]
        frac = np.minimum(z - np.floor(z), np.ceil(z) - z)
        return int(self.binary[np.argmax(frac)])  # argmax picks the lowest index on ties


def branch_and_bound(model: RelaxModel, params: BnbParams | None = None) -> MilpResult:
    return _Engine(model, params or BnbParams()).run()
