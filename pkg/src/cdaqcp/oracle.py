"""Brute-force ground truth used to check the solver and the formulation.

Nothing here calls the MILP engine: the grid oracle scans a lattice, and
the equivalence check evaluates lifted rows directly after running the
rotate/fold recursion with the binaries fixed.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .formulation import build_block, lift_arrays
from .geometry import Triangle, angle_span, knot, member_plus, sector_angles, triangle
from .instance_io import QcpInstance

MAX_GRID_DIM = 4
MAX_LATTICE = 10**8
GRID_FEAS_TOL = 1e-9
SAMPLER_SEED = 20240607


@dataclass
class GridResult:
    feasible: bool
    value: float
    point: np.ndarray | None
    lattice_size: int


def _axis(l: float, u: float, step: float) -> np.ndarray:
    k = int(math.floor((u - l) / step + 1e-9))
    pts = l + step * np.arange(k + 1)
    if u - pts[-1] > 1e-12:
        pts = np.append(pts, u)
    return pts


def grid_optimum(inst: QcpInstance, step: float, chunk: int = 1 << 20) -> GridResult:
    """Best lattice point of the box with spacing ``step`` (endpoints included)."""
    if inst.n > MAX_GRID_DIM:
        raise ValueError(f"grid oracle supports n <= {MAX_GRID_DIM}, got n={inst.n}")
    if not step > 0:
        raise ValueError("step must be positive")
    axes = [_axis(l, u, step) for l, u in zip(inst.lower, inst.upper)]
    size = int(np.prod([a.size for a in axes])) if axes else 1
    if size > MAX_LATTICE:
        raise ValueError(f"lattice of {size} points exceeds {MAX_LATTICE}")
    shape = tuple(a.size for a in axes)
    best_val, best_pt = math.inf, None
    for begin in range(0, size, chunk):
        flat = np.arange(begin, min(size, begin + chunk))
        idx = np.unravel_index(flat, shape) if shape else ()
        X = np.stack([a[i] for a, i in zip(axes, idx)], axis=1) if shape else np.zeros((1, 0))
        ok = np.ones(X.shape[0], dtype=bool)
        for i in range(1, inst.m + 1):
            g = np.einsum("si,ij,sj->s", X, inst.Q[i], X) + X @ inst.c[i]
            ok &= g <= inst.rhs[i - 1] + GRID_FEAS_TOL
        if not ok.any():
            continue
        Xf = X[ok]
        f = np.einsum("si,ij,sj->s", Xf, inst.Q[0], Xf) + Xf @ inst.c[0] + inst.constant
        k = int(np.argmin(f))
        if f[k] < best_val:
            best_val, best_pt = float(f[k]), Xf[k].copy()
    return GridResult(best_pt is not None, best_val, best_pt, size)


def enumerate_disjunction(l: float, u: float, nu: int) -> list[tuple[tuple[int, ...], Triangle]]:
    """All 2**nu fold patterns with their triangles."""
    if not (1 <= nu <= 8):
        raise ValueError("nu must lie in [1, 8]")
    span = angle_span(l, u)
    out = []
    for z in itertools.product((0, 1), repeat=nu):
        phi, beta = sector_angles(z, span)
        out.append((z, triangle(phi, beta)))
    return out


def _halton_unit(count: int, seed: int) -> np.ndarray:
    return qmc.Halton(d=2, scramble=True, seed=seed).random(count)


def sample_triangle(tri: Triangle, count: int, seed: int = SAMPLER_SEED) -> np.ndarray:
    """Low-discrepancy points of a triangle through barycentric folding."""
    a, b = _halton_unit(count, seed).T
    flip = a + b > 1
    a[flip], b[flip] = 1 - a[flip], 1 - b[flip]
    V = tri.vertices()
    return V[2] + a[:, None] * (V[0] - V[2]) + b[:, None] * (V[1] - V[2])


def _box_violation(x, y, l: float, u: float) -> np.ndarray:
    """Signed violation of the box-level rows (x bounds, y in [0, M], the chord)."""
    M = max(l * l, u * u)
    chord = (y - (l + u) * x + l * u) / math.hypot(1.0, l + u)
    return np.max(np.stack([l - x, x - u, -y, y - M, chord]), axis=0)


def region_violation(x, y, tri: Triangle, l: float, u: float, mode: str) -> np.ndarray:
    """Signed distance-like violation of (triangle or its curved variant) intersected with the box rows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if mode == "D":
        own = tri.violation(x, y)
    else:
        ax, ay, rhs = tri.halfplanes[2]
        secant = (rhs - (ax * x + ay * y)) / math.hypot(ax, ay)
        curve = (x * x - y) / np.sqrt(1.0 + 4.0 * x * x)
        own = np.maximum(secant, curve)
    return np.maximum(own, _box_violation(x, y, l, u))


def sample_relaxation(l: float, u: float, nu: int, count: int, mode: str = "D", seed: int = SAMPLER_SEED) -> np.ndarray:
    """Points of the projected level-``nu`` set, spread over all triangles."""
    tris = enumerate_disjunction(l, u, nu)
    per = max(1, -(-count // len(tris)))
    pts = []
    for k, (_, tri) in enumerate(tris):
        P = sample_triangle(tri, 2 * per, seed + k)
        keep = region_violation(P[:, 0], P[:, 1], tri, l, u, mode) <= 0
        pts.append(P[keep][:per])
    return np.concatenate(pts)[:count]


@dataclass
class EquivalenceReport:
    l: float
    u: float
    nu: int
    mode: str
    checked: int = 0
    skipped: int = 0
    vertex_failures: list = field(default_factory=list)
    disagreements: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.vertex_failures and not self.disagreements

    def to_json(self) -> str:
        d = asdict(self)
        d["ok"] = self.ok
        return json.dumps(d, indent=2)


def check_projection_equivalence(
    l: float,
    u: float,
    nu: int,
    mode: str = "D",
    *,
    samples: int = 200,
    tol: float = 1e-7,
    outer_margin: float = 1e-5,
    C: float | None = None,
    C_list=None,
    seed: int = SAMPLER_SEED,
) -> EquivalenceReport:
    """Compare, for every fixed z, lifted feasibility with region membership.

    Half of the samples come from the triangle itself and half from a box
    three times its size.  A point counts as inside when its region
    violation is at most ``-tol``, as outside when it is at least
    ``outer_margin``; points in between sit on the boundary and are skipped.
    """
    if not (1 <= nu <= 4):
        raise ValueError("nu must lie in [1, 4]")
    block = build_block(l, u, nu, mode, C=C, C_list=C_list)
    report = EquivalenceReport(l, u, nu, mode)

    def lifted_violation(x, y, z):
        vals = lift_arrays(x, y, l, u, nu, z, C=block.C, C_list=block.C_list)
        return block.violation(vals)

    for zi, (z, tri) in enumerate(enumerate_disjunction(l, u, nu)):
        V = tri.vertices()
        if mode == "Dplus":
            V = V[:2]
        V = V[_box_violation(V[:, 0], V[:, 1], l, u) <= 1e-12]
        vv = lifted_violation(V[:, 0], V[:, 1], z)
        for (x, y), g in zip(V, vv):
            if g > tol:
                report.vertex_failures.append({"z": list(z), "x": float(x), "y": float(y), "violation": float(g)})

        inner = sample_triangle(tri, samples - samples // 2, seed + zi)
        lo, hi = tri.vertices().min(axis=0), tri.vertices().max(axis=0)
        mid, half = 0.5 * (lo + hi), 1.5 * (hi - lo) + 1e-9
        outer = mid - half + 2 * half * _halton_unit(samples // 2, seed + 1000 + zi)
        P = np.concatenate([inner, outer])
        reg = region_violation(P[:, 0], P[:, 1], tri, l, u, mode)
        lift = lifted_violation(P[:, 0], P[:, 1], z)
        inside = reg <= -tol
        outside = reg >= outer_margin
        report.checked += int(inside.sum() + outside.sum())
        report.skipped += int((~inside & ~outside).sum())
        bad = (inside & (lift > tol)) | (outside & (lift <= tol))
        for k in np.flatnonzero(bad):
            report.disagreements.append(
                {
                    "z": list(z),
                    "x": float(P[k, 0]),
                    "y": float(P[k, 1]),
                    "member": bool(inside[k]),
                    "lifted_violation": float(lift[k]),
                }
            )
    return report


def knot_values(l: float, u: float, nu: int) -> np.ndarray:
    """Sorted distinct knot x-values of the level-``nu`` partition."""
    xs = set()
    for _, tri in enumerate_disjunction(l, u, nu):
        xs.add(round(knot(tri.alpha), 12))
        xs.add(round(knot(tri.beta), 12))
    return np.array(sorted(xs))


def random_qcp(seed: int, n_max: int = 3, m_max: int = 3) -> QcpInstance:
    """Seeded random instance with coefficients in [-2, 2] and a box inside [-2, 2].

    Each constraint gets a slack between 0.5 and 1 at a random box point,
    so the instance is always feasible.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(0, m_max + 1))
    a = rng.uniform(-2, 1, n)
    width = rng.uniform(0.5, 1.0, n) * np.minimum(2.0, 2.0 - a)
    lower, upper = a, a + width
    Q, c = [], []
    for _ in range(m + 1):
        A = rng.uniform(-2, 2, (n, n))
        Q.append(np.round(0.5 * (A + A.T), 6))
        c.append(np.round(rng.uniform(-2, 2, n), 6))
    x0 = rng.uniform(lower, upper)
    rhs = np.array([x0 @ Q[i] @ x0 + c[i] @ x0 + rng.uniform(0.5, 1.0) for i in range(1, m + 1)])
    return QcpInstance(n=n, m=m, Q=Q, c=c, rhs=rhs, lower=lower, upper=upper, name=f"random_{seed}")


def circle_instance() -> QcpInstance:
    """min x1 + x2 subject to x1**2 + x2**2 >= 0.5 on the unit square."""
    return QcpInstance(
        n=2,
        m=1,
        Q=[np.zeros((2, 2)), -np.eye(2)],
        c=[np.ones(2), np.zeros(2)],
        rhs=np.array([-0.5]),
        lower=np.zeros(2),
        upper=np.ones(2),
        name="circle",
    )
