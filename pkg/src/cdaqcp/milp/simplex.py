"""Bounded-variable revised simplex (dual variant) with warm starts.

Rows are written ``A x - s = 0`` with one slack per row, so every column,
slack or structural, carries its own bounds.  Structural bounds must be
finite; infinite slack bounds are replaced by the (padded) activity range
implied by the column bounds, which never cuts anything off.  With every
column boxed, any basis can be made dual feasible by moving nonbasic
columns to the bound matching the sign of their reduced cost, so the dual
simplex needs no phase 1 and restarts cheaply after bound changes or after
rows are appended.  That is the access pattern of branch-and-bound with
outer-approximation cuts.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

PRIMAL_TOL = 1e-8
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
DRIFT_TOL = 1e-9


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL = "numerical_breakdown"
    ITERATION_LIMIT = "iteration_limit"


class SingularBasis(RuntimeError):
    pass


@dataclass
class LpProblem:
    """min c'x  s.t.  A x (senses) rhs,  lb <= x <= ub with finite bounds."""

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.lb = np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.asarray(self.ub, dtype=float).ravel()
        if len(self.senses) != self.A.shape[0] or self.rhs.size != self.A.shape[0]:
            raise ValueError("row count mismatch between A, senses and rhs")
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("column bound length mismatch")
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise ValueError("every column needs finite bounds")
        for s in self.senses:
            if s not in ("<=", ">=", "=="):
                raise ValueError(f"unknown row sense {s!r}")

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.rhs.size, -np.inf)
        hi = np.full(self.rhs.size, np.inf)
        for i, s in enumerate(self.senses):
            if s in ("<=", "=="):
                hi[i] = self.rhs[i]
            if s in (">=", "=="):
                lo[i] = self.rhs[i]
        return lo, hi


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    value: float = np.nan
    duals: np.ndarray | None = None
    iterations: int = 0


def _activity_range(A: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a_lo = np.where(A > 0, A * lo, A * hi).sum(axis=1)
    a_hi = np.where(A > 0, A * hi, A * lo).sum(axis=1)
    return a_lo, a_hi


class DualSimplex:
    """Warm-startable LP over boxed columns.

    Columns ``0..n-1`` are structural, ``n..n+m-1`` are row slacks.
    """

    def __init__(self, c, A, row_lo, row_hi, col_lo, col_hi):
        self.c = np.asarray(c, dtype=float).copy()
        self.n = self.c.size
        self.root_lo = np.asarray(col_lo, dtype=float).copy()
        self.root_hi = np.asarray(col_hi, dtype=float).copy()
        if not (np.all(np.isfinite(self.root_lo)) and np.all(np.isfinite(self.root_hi))):
            raise ValueError("every structural column needs finite bounds")
        self.A = np.zeros((0, self.n))
        self.lo = self.root_lo.copy()
        self.hi = self.root_hi.copy()
        self.basic = np.zeros(0, dtype=int)
        self.at_upper = np.zeros(self.n, dtype=bool)
        self.Binv = np.zeros((0, 0))
        self.stale = True
        self.since_refactor = 0
        self.iterations = 0
        self._M = None
        self.row_epoch = 0
        self.add_rows(A, row_lo, row_hi)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def add_rows(self, A, row_lo, row_hi) -> None:
        A = np.asarray(A, dtype=float).reshape(-1, self.n)
        if A.shape[0] == 0:
            return
        row_lo = np.asarray(row_lo, dtype=float).ravel()
        row_hi = np.asarray(row_hi, dtype=float).ravel()
        a_lo, a_hi = _activity_range(A, self.root_lo, self.root_hi)
        pad_lo = 1.0 + 1e-6 * np.abs(a_lo)
        pad_hi = 1.0 + 1e-6 * np.abs(a_hi)
        s_lo = np.where(np.isfinite(row_lo), row_lo, a_lo - pad_lo)
        s_hi = np.where(np.isfinite(row_hi), row_hi, a_hi + pad_hi)
        first = self.n + self.m
        k = A.shape[0]
        if not self.stale and self.m:
            # new slacks enter the basis: inv([[B, 0], [R, -I]]) = [[Binv, 0], [R Binv, -I]]
            R = self._basic_part(A)
            self.Binv = np.block([[self.Binv, np.zeros((self.m, k))], [R @ self.Binv, -np.eye(k)]])
        elif not self.stale:
            self.Binv = -np.eye(k)
        self.A = np.vstack([self.A, A])
        self._M = None
        self.lo = np.concatenate([self.lo, s_lo])
        self.hi = np.concatenate([self.hi, s_hi])
        self.at_upper = np.concatenate([self.at_upper, np.zeros(k, dtype=bool)])
        self.basic = np.concatenate([self.basic, np.arange(first, first + k)])

    def _basic_part(self, A: np.ndarray) -> np.ndarray:
        """Columns of the new rows ``A`` at the current basic variables."""
        out = np.zeros((A.shape[0], self.basic.size))
        structural = self.basic < self.n
        out[:, structural] = A[:, self.basic[structural]]
        return out

    def remove_rows(self, rows) -> None:
        """Drop rows whose slacks are basic; the basis inverse shrinks in place."""
        rows = np.unique(np.asarray(rows, dtype=int))
        if rows.size == 0:
            return
        slacks = self.n + rows
        pos = np.flatnonzero(np.isin(self.basic, slacks))
        if pos.size != rows.size:
            raise ValueError("only rows with basic slacks can be removed")
        keep_rows = np.setdiff1d(np.arange(self.m), rows)
        if not self.stale:
            keep_pos = np.setdiff1d(np.arange(self.m), pos)
            self.Binv = self.Binv[np.ix_(keep_pos, keep_rows)]
        basic = np.delete(self.basic, pos)
        # renumber the surviving slacks
        remap = np.full(self.n + self.m, -1)
        remap[: self.n] = np.arange(self.n)
        remap[self.n + keep_rows] = self.n + np.arange(keep_rows.size)
        self.basic = remap[basic]
        keep_cols = np.concatenate([np.arange(self.n), self.n + keep_rows])
        self.A = self.A[keep_rows]
        self._M = None
        self.row_epoch += 1
        self.lo, self.hi = self.lo[keep_cols], self.hi[keep_cols]
        self.at_upper = self.at_upper[keep_cols]

    def set_col_bounds(self, lo, hi) -> None:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo < self.root_lo - 1e-12) or np.any(hi > self.root_hi + 1e-12):
            raise ValueError("column bounds may only tighten the root bounds")
        self.lo[: self.n] = lo
        self.hi[: self.n] = hi

    def get_basis(self) -> tuple[np.ndarray, np.ndarray, int]:
        return self.basic.copy(), self.at_upper.copy(), self.row_epoch

    def set_basis(self, basis) -> bool:
        """Restore a basis saved by :meth:`get_basis`.

        Rows added since then get their slacks basic.  A basis saved before a
        row removal no longer matches the slack numbering; it is ignored and
        False is returned.
        """
        basic, at_upper, epoch = basis
        if epoch != self.row_epoch:
            return False
        extra = self.m - basic.size
        if extra < 0:
            raise ValueError("basis has more rows than the problem")
        first = self.n + basic.size
        basic = np.concatenate([basic, np.arange(first, first + extra)]).astype(int)
        at_upper = np.concatenate([at_upper, np.zeros(extra, dtype=bool)])
        if not np.array_equal(basic, self.basic):
            self.stale = True
        self.basic = basic
        self.at_upper = at_upper
        return True

    # -- linear algebra -------------------------------------------------

    def _full(self) -> np.ndarray:
        if self._M is None or self._M.shape[0] != self.m:
            self._M = np.hstack([self.A, -np.eye(self.m)])
        return self._M

    def _refactor(self, M: np.ndarray) -> None:
        B = M[:, self.basic]
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
        else:
            lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
            d = np.abs(np.diag(lu))
            if d.min() <= 1e-13 * max(1.0, d.max()):
                raise SingularBasis("basis matrix is singular")
            self.Binv = scipy.linalg.lu_solve((lu, piv), np.eye(self.m), check_finite=False)
        self.since_refactor = 0
        self.stale = False

    def _try_refactor(self, M: np.ndarray) -> bool:
        """Refactor, repairing a singular basis with slacks; False if that fails too."""
        try:
            self._refactor(M)
            return True
        except SingularBasis:
            pass
        self._repair_basis(M)
        try:
            self._refactor(M)
            return True
        except SingularBasis:
            return False

    def reset_basis(self) -> None:
        """Fall back to the all-slack basis, which is always nonsingular."""
        self.basic = np.arange(self.n, self.n + self.m)
        self.at_upper = np.zeros(self.n + self.m, dtype=bool)
        self.stale = True

    def _primal(self, M: np.ndarray) -> np.ndarray:
        x = np.where(self.at_upper, self.hi, self.lo)
        x[self.basic] = 0.0
        x[self.basic] = -self.Binv @ (M @ x)
        return x

    def _repair_basis(self, M: np.ndarray) -> None:
        """Swap dependent basic columns for slacks until B is nonsingular."""
        basic = list(self.basic)
        Bm = M[:, basic]
        q, r, perm = scipy.linalg.qr(Bm, pivoting=True)
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > 1e-10 * max(1.0, diag.max(initial=0.0))))
        keep = [basic[p] for p in perm[:rank]]
        used = set(keep)
        for i in range(self.m):
            if len(keep) == self.m:
                break
            s = self.n + i
            if s in used:
                continue
            trial = M[:, keep + [s]]
            if np.linalg.matrix_rank(trial) == len(keep) + 1:
                keep.append(s)
                used.add(s)
        self.basic = np.array(keep, dtype=int)
        self.stale = True

    # -- main loop --------------------------------------------------------

    def solve(self, max_iter: int | None = None) -> LpStatus:
        m, N = self.m, self.n + self.m
        M = self._full()
        cfull = np.concatenate([self.c, np.zeros(m)])
        if max_iter is None:
            max_iter = 50 * N + 1000
        if self.stale and not self._try_refactor(M):
            return LpStatus.NUMERICAL
        is_basic = np.zeros(N, dtype=bool)
        is_basic[self.basic] = True
        movable = self.hi > self.lo
        degenerate = 0
        bland = False
        fresh = True
        for it in range(max_iter):
            self.iterations += 1
            if fresh:
                # full recomputation; between refreshes x and d are updated per pivot
                y = cfull[self.basic] @ self.Binv
                d = cfull - y @ M
                nb = ~is_basic
                # restore dual feasibility by bound flips (every column is boxed)
                self.at_upper[nb & ~self.at_upper & (d < -DUAL_TOL)] = True
                self.at_upper[nb & self.at_upper & (d > DUAL_TOL)] = False
                self.at_upper[nb & ~movable] = False
                x = self._primal(M)
            xB = x[self.basic]
            lo_b = self.lo[self.basic]
            hi_b = self.hi[self.basic]
            below = lo_b - xB
            above = xB - hi_b
            infeas = np.maximum(below, above)
            if bland:
                cand = np.flatnonzero(infeas > PRIMAL_TOL)
                r = int(cand[np.argmin(self.basic[cand])]) if cand.size else 0
            else:
                r = int(np.argmax(infeas)) if m else 0
            if m == 0 or infeas[r] <= PRIMAL_TOL:
                if not fresh:
                    fresh = True
                    continue
                if self.since_refactor and not self._accurate(M, x):
                    if not self._try_refactor(M):
                        return LpStatus.NUMERICAL
                    is_basic[:] = False
                    is_basic[self.basic] = True
                    fresh = True
                    continue
                self.x = x
                self.y = cfull[self.basic] @ self.Binv
                self.d = d
                return LpStatus.OPTIMAL
            fresh = False
            to_lower = below[r] > above[r]
            alpha = self.Binv[r] @ M
            nb = ~is_basic
            up = self.at_upper
            if to_lower:
                elig = nb & movable & ((~up & (alpha < -PIVOT_TOL)) | (up & (alpha > PIVOT_TOL)))
            else:
                elig = nb & movable & ((~up & (alpha > PIVOT_TOL)) | (up & (alpha < -PIVOT_TOL)))
            idx = np.flatnonzero(elig)
            if idx.size == 0:
                if self.since_refactor:
                    # confirm with a fresh factorization before declaring infeasibility
                    if not self._try_refactor(M):
                        return LpStatus.NUMERICAL
                    is_basic[:] = False
                    is_basic[self.basic] = True
                    fresh = True
                    continue
                return LpStatus.INFEASIBLE
            dj = np.where(up[idx], np.maximum(-d[idx], 0.0), np.maximum(d[idx], 0.0))
            aj = np.abs(alpha[idx])
            ratios = dj / aj
            if bland:
                best = ratios.min()
                k = int(np.flatnonzero(ratios <= best + 1e-12)[0])
            else:
                bound = ((dj + DUAL_TOL) / aj).min()
                ok = np.flatnonzero(ratios <= bound)
                k = int(ok[np.argmax(aj[ok])])
            q = int(idx[k])
            if ratios[k] <= 1e-12:
                degenerate += 1
                if degenerate > 2 * N:
                    bland = True
            else:
                degenerate = 0
            col = self.Binv @ M[:, q]
            piv = col[r]
            if abs(piv) < PIVOT_TOL:
                if not self._try_refactor(M):
                    return LpStatus.NUMERICAL
                is_basic[:] = False
                is_basic[self.basic] = True
                fresh = True
                continue
            leaving = self.basic[r]
            target = lo_b[r] if to_lower else hi_b[r]
            # primal step: x_q moves by t, basics by -t * col, leaving lands on its bound
            t = (xB[r] - target) / piv
            x[self.basic] -= t * col
            x[q] += t
            x[leaving] = target
            d -= (d[q] / alpha[q]) * alpha
            d[q] = 0.0
            self.at_upper[leaving] = not to_lower
            is_basic[leaving] = False
            is_basic[q] = True
            self.basic[r] = q
            self.at_upper[q] = False
            rowr = self.Binv[r] / piv
            self.Binv -= np.outer(col, rowr)
            self.Binv[r] = rowr
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR_EVERY:
                if not self._try_refactor(M):
                    return LpStatus.NUMERICAL
                is_basic[:] = False
                is_basic[self.basic] = True
                fresh = True
        return LpStatus.ITERATION_LIMIT

    def _accurate(self, M: np.ndarray, x: np.ndarray) -> bool:
        return float(np.abs(M @ x).max(initial=0.0)) <= DRIFT_TOL * max(1.0, float(np.abs(x).max(initial=0.0)))

    @property
    def value(self) -> float:
        return float(self.c @ self.x[: self.n])

    @property
    def solution(self) -> np.ndarray:
        return self.x[: self.n].copy()

    @property
    def row_duals(self) -> np.ndarray:
        """Sensitivity of the optimal value to each row's active bound."""
        return self.y.copy()


def solve_lp(p: LpProblem) -> LpResult:
    lo, hi = p.row_bounds()
    if np.any(lo > hi) or np.any(p.lb > p.ub):
        return LpResult(LpStatus.INFEASIBLE)
    lp = DualSimplex(p.c, p.A, lo, hi, p.lb, p.ub)
    status = lp.solve()
    if status != LpStatus.OPTIMAL:
        return LpResult(status, iterations=lp.iterations)
    return LpResult(status, lp.solution, lp.value, lp.row_duals, lp.iterations)
