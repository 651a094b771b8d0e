"""Diagonal perturbations that make every quadratic form convex.

For each Q we pick delta with Q + diag(delta) PSD.  Writing y_j = x_j**2,
x'Qx = x'(Q + diag(delta))x - delta'y, so all nonconvexity moves into the
pairs (x_j, y_j).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance_io import QcpInstance

PSD_TOL = 1e-10
SHIFT_MARGIN = 1e-9


def jacobi_eigenvalues(Q: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm is below ``tol`` (relative
    to the norm of ``Q`` when that exceeds one).
    """
    A = np.array(Q, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.any(np.abs(A - A.T) > 1e-12):
        raise ValueError("matrix is not symmetric")
    if n == 0:
        return np.zeros(0)
    target = tol * max(1.0, float(np.linalg.norm(A)))
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, float(np.sum(A * A) - np.sum(np.diag(A) ** 2))))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J' A J with J the (p, q) plane rotation
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A))


def min_eigenvalue(Q: np.ndarray) -> float:
    return float(jacobi_eigenvalues(Q)[0])


def is_diagonal(Q: np.ndarray) -> bool:
    return not np.any(Q - np.diag(np.diag(Q)))


def perturbation(Q: np.ndarray, paper_exact_diagonal: bool = False) -> np.ndarray:
    """Diagonal shift making ``Q + diag(delta)`` PSD.

    Diagonal matrices get their negative entries zeroed (or, with
    ``paper_exact_diagonal``, every entry).  PSD matrices get zero.  Anything
    else gets a uniform shift by the most negative eigenvalue plus a margin.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if is_diagonal(Q):
        d = np.diag(Q)
        if not np.any(d < 0):
            return np.zeros(n)
        return -d.copy() if paper_exact_diagonal else np.maximum(-d, 0.0)
    lam = min_eigenvalue(Q)
    if lam >= -PSD_TOL:
        return np.zeros(n)
    return np.full(n, -lam + SHIFT_MARGIN)


@dataclass
class ConvexifiedInstance:
    instance: QcpInstance
    delta: list[np.ndarray]
    perturbed: list[np.ndarray]

    @property
    def coupled(self) -> np.ndarray:
        """Variables whose y_j appears in the objective or some constraint."""
        return np.any(np.array(self.delta) != 0, axis=0) if self.delta else np.zeros(0, dtype=bool)

    @property
    def is_convex(self) -> bool:
        return not np.any(self.coupled)


def convexify_instance(inst: QcpInstance, paper_exact_diagonal: bool = False) -> ConvexifiedInstance:
    deltas, mats = [], []
    for Q in inst.Q:
        d = perturbation(Q, paper_exact_diagonal)
        P = Q + np.diag(d)
        if P.size and min_eigenvalue(P) < -1e-8:
            raise ValueError("perturbation failed to produce a PSD matrix")
        deltas.append(d)
        mats.append(P)
    return ConvexifiedInstance(inst, deltas, mats)
