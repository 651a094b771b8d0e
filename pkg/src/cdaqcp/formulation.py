"""Mixed-binary encodings of the level-nu relaxations of {(x, x**2)}.

A block encodes one pair (x_j, y_j).  For nu >= 1 the vector
(x, (y - 1)/2) is rotated onto the bisector of its angular sector and folded
up, nu times; each fold is an absolute value written with one binary and two
weights lambda.  The last lifted pair is then pinned to a thin sector by a
secant row and either two tangent rows (mode "D", linear) or the convex row
y >= x**2 (mode "Dplus").
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .geometry import AngleSpan, angle_span

MODES = ("D", "Dplus")


@dataclass(frozen=True)
class LinearRow:
    coeffs: Mapping[Hashable, float]
    sense: str  # "<=" or "=="
    rhs: float
    label: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", "=="):
            raise ValueError(f"row sense must be '<=' or '==', got {self.sense!r}")


@dataclass(frozen=True)
class QuadRow:
    """``v[index] @ matrix @ v[index] + linear . v <= rhs`` with PSD ``matrix``."""

    index: tuple
    matrix: np.ndarray
    linear: Mapping[Hashable, float]
    rhs: float
    label: str = ""


@dataclass
class LiftedBlock:
    l: float
    u: float
    nu: int
    mode: str
    span: AngleSpan | None
    C: float
    C_list: list[float]
    variables: list[str]
    lower: dict[str, float]
    upper: dict[str, float]
    binaries: list[str]
    rows: list[LinearRow]
    quad_rows: list[QuadRow] = field(default_factory=list)

    @property
    def continuous(self) -> list[str]:
        return [v for v in self.variables if v not in self.binaries]

    def row_arrays(self):
        """Dense ``(A, rhs, is_equality)`` over ``self.variables``."""
        pos = {v: k for k, v in enumerate(self.variables)}
        A = np.zeros((len(self.rows), len(self.variables)))
        for r, row in enumerate(self.rows):
            for name, coef in row.coeffs.items():
                A[r, pos[name]] += coef
        rhs = np.array([row.rhs for row in self.rows])
        eq = np.array([row.sense == "==" for row in self.rows], dtype=bool)
        return A, rhs, eq

    def violation(self, assignment: Mapping[str, np.ndarray | float]) -> np.ndarray:
        """Worst violation of rows, bounds and quadratic rows per sample.

        ``assignment`` maps every block variable to a scalar or to equally
        shaped arrays of samples.
        """
        vals = np.array([np.asarray(assignment[v], dtype=float) for v in self.variables])
        shape = vals.shape[1:]
        vals = vals.reshape(len(self.variables), -1)
        A, rhs, eq = self.row_arrays()
        worst = np.zeros(vals.shape[1])
        if len(self.rows):
            gap = A @ vals - rhs[:, None]
            gap[eq] = np.abs(gap[eq])
            worst = np.maximum(worst, gap.max(axis=0))
        lo = np.array([self.lower[v] for v in self.variables])[:, None]
        hi = np.array([self.upper[v] for v in self.variables])[:, None]
        worst = np.maximum(worst, (lo - vals).max(axis=0))
        worst = np.maximum(worst, (vals - hi).max(axis=0))
        pos = {v: k for k, v in enumerate(self.variables)}
        for q in self.quad_rows:
            sub = vals[[pos[v] for v in q.index]]
            g = np.einsum("is,ij,js->s", sub, q.matrix, sub)
            for name, coef in q.linear.items():
                g = g + coef * vals[pos[name]]
            worst = np.maximum(worst, g - q.rhs)
        return worst.reshape(shape)


def constants(l: float, u: float, nu: int) -> tuple[float, list[float]]:
    """Big-M style bounds on the rotated second coordinates.

    ``C`` bounds the norm of (x, (y-1)/2) over the box; ``C_list[j-1]``
    bounds the quantity folded at level j + 1.
    """
    if l > u:
        raise ValueError(f"lower bound {l} exceeds upper bound {u}")
    if nu < 1:
        raise ValueError("constants need nu >= 1")
    C = max(l * l, u * u) / 2 + 0.5
    theta_d = angle_span(l, u).theta_d
    return C, [C * math.sin(theta_d / 2 ** (j + 1)) for j in range(1, nu)]


def block_variable_names(nu: int) -> list[str]:
    names = ["x", "y"]
    for j in range(1, nu + 1):
        names += [f"xi{j}", f"eta{j}", f"lam{j}_1", f"lam{j}_2"]
    return names + [f"z{j}" for j in range(1, nu + 1)]


def _box_rows(l: float, u: float) -> list[LinearRow]:
    # y <= (l + u) x - l u
    return [LinearRow({"x": -(l + u), "y": 1.0}, "<=", -l * u, "secant")]


def _square_row() -> QuadRow:
    return QuadRow(("x",), np.ones((1, 1)), {"y": -1.0}, 0.0, "y>=x^2")


def build_block(
    l: float,
    u: float,
    nu: int,
    mode: str = "D",
    *,
    C: float | None = None,
    C_list: Sequence[float] | None = None,
) -> LiftedBlock:
    """Rows of D_nu(l, u) (mode "D") or D+_nu(l, u) (mode "Dplus").

    ``C`` and ``C_list`` override the computed constants; only mutation
    tests should pass them.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if l > u:
        raise ValueError(f"lower bound {l} exceeds upper bound {u}")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    ysup = max(l * l, u * u)
    names = block_variable_names(nu)
    lower = {"x": l, "y": 0.0}
    upper = {"x": u, "y": ysup}
    rows = _box_rows(l, u)
    quad: list[QuadRow] = []

    if nu == 0:
        if mode == "D":
            rows.append(LinearRow({"x": 2 * l, "y": -1.0}, "<=", l * l, "tangent_l"))
            rows.append(LinearRow({"x": 2 * u, "y": -1.0}, "<=", u * u, "tangent_u"))
        else:
            quad.append(_square_row())
        return LiftedBlock(l, u, 0, mode, None, 0.0, [], names, lower, upper, [], rows, quad)

    span = angle_span(l, u)
    if span.theta_d <= 0:
        raise ValueError("fixed variables (l == u) must be eliminated before building blocks")
    C0, Cs = constants(l, u, nu)
    C = C0 if C is None else C
    Cs = list(Cs if C_list is None else C_list)

    for j in range(1, nu + 1):
        lower.update({f"xi{j}": -C, f"eta{j}": 0.0, f"lam{j}_1": 0.0, f"lam{j}_2": 0.0, f"z{j}": 0.0})
        upper.update({f"xi{j}": C, f"eta{j}": C, f"lam{j}_1": 1.0, f"lam{j}_2": 1.0, f"z{j}": 1.0})

    # level 1: rotate (x, y/2 - 1/2) by theta_mid
    c, s = math.cos(span.theta_mid), math.sin(span.theta_mid)
    rows += [
        LinearRow({"xi1": 1.0, "x": -c, "y": -0.5 * s}, "==", -0.5 * s, "rot1"),
        LinearRow({"lam1_2": C, "lam1_1": -C, "x": s, "y": -0.5 * c}, "==", -0.5 * c, "omega1"),
        LinearRow({"eta1": 1.0, "lam1_1": -C, "lam1_2": -C}, "==", 0.0, "abs1"),
    ]
    # deeper levels: rotate by theta_d / 2**(j+1) and fold
    for j in range(1, nu):
        a = span.theta_d / 2 ** (j + 1)
        c, s = math.cos(a), math.sin(a)
        Cj = Cs[j - 1]
        k = j + 1
        rows += [
            LinearRow({f"xi{k}": 1.0, f"xi{j}": -c, f"eta{j}": -s}, "==", 0.0, f"rot{k}"),
            LinearRow({f"lam{k}_2": Cj, f"lam{k}_1": -Cj, f"xi{j}": s, f"eta{j}": -c}, "==", 0.0, f"omega{k}"),
            LinearRow({f"eta{k}": 1.0, f"lam{k}_1": -Cj, f"lam{k}_2": -Cj}, "==", 0.0, f"abs{k}"),
        ]
    for j in range(1, nu + 1):
        rows += [
            LinearRow({f"lam{j}_1": 1.0, f"z{j}": 1.0}, "<=", 1.0, f"switch{j}_1"),
            LinearRow({f"lam{j}_2": 1.0, f"z{j}": -1.0}, "<=", 0.0, f"switch{j}_2"),
        ]

    b = span.theta_d / 2 ** (nu + 1)
    xi, eta = f"xi{nu}", f"eta{nu}"
    cb, sb = math.cos(b), math.sin(b)
    rows.append(LinearRow({xi: -cb, eta: -sb, "y": 0.5 * cb}, "<=", -0.5 * cb, "sector_secant"))
    if mode == "D":
        rows.append(
            LinearRow({xi: math.cos(2 * b), eta: math.sin(2 * b), "y": -0.5}, "<=", 0.5, "sector_tangent1")
        )
        rows.append(LinearRow({xi: 1.0, "y": -0.5}, "<=", 0.5, "sector_tangent2"))
    else:
        quad.append(_square_row())

    binaries = [f"z{j}" for j in range(1, nu + 1)]
    return LiftedBlock(l, u, nu, mode, span, C, Cs, names, lower, upper, binaries, rows, quad)


def lift_arrays(
    x,
    y,
    l: float,
    u: float,
    nu: int,
    z: Sequence[int] | None = None,
    *,
    C: float | None = None,
    C_list: Sequence[float] | None = None,
) -> dict[str, np.ndarray]:
    """Run the rotate/fold recursion on arrays of (x, y).

    With ``z=None`` each fold picks z = 1 when the rotated second coordinate
    is nonnegative (ties go to 1).  With a fixed ``z`` the fold direction is
    forced, which may produce negative lambdas; the caller checks rows.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    span = angle_span(l, u)
    C0, Cs = constants(l, u, nu)
    C = C0 if C is None else C
    Cs = list(Cs if C_list is None else C_list)
    out = {"x": x, "y": y}
    v, w = x, 0.5 * (y - 1.0)
    for j in range(1, nu + 1):
        a = span.theta_mid if j == 1 else span.theta_d / 2**j
        scale = C if j == 1 else Cs[j - 2]
        c, s = math.cos(a), math.sin(a)
        xi, omega = c * v + s * w, -s * v + c * w
        if z is None:
            # rounding noise around omega = 0 still counts as the tie, which goes to 1
            zj = (omega >= -1e-12 * np.maximum(1.0, np.hypot(v, w))).astype(float)
        else:
            zj = np.full(omega.shape, float(z[j - 1]))
        eta = np.where(zj > 0.5, omega, -omega)
        lam2 = np.where(zj > 0.5, omega / scale, 0.0)
        lam1 = np.where(zj > 0.5, 0.0, -omega / scale)
        out.update({f"xi{j}": xi, f"eta{j}": eta, f"lam{j}_1": lam1, f"lam{j}_2": lam2, f"z{j}": zj})
        v, w = xi, eta
    return out


def lift_witness(x: float, l: float, u: float, nu: int) -> dict[str, float]:
    """Lifted point of the curve point (x, x**2); feasible for both modes."""
    if not (l <= x <= u):
        raise ValueError(f"x={x} outside [{l}, {u}]")
    if nu < 1:
        raise ValueError("lift_witness needs nu >= 1")
    vals = lift_arrays(np.array([x]), np.array([x * x]), l, u, nu)
    return {k: float(v[0]) for k, v in vals.items()}


def violation_bound(delta: Sequence[float], bounds: Sequence[tuple[float, float]], nu: int) -> float:
    """Largest possible violation of a perturbed constraint at level ``nu``."""
    if nu < 2:
        raise ValueError("violation bound needs nu >= 2")
    delta = np.asarray(delta, dtype=float)
    if not np.any(delta):
        return 0.0
    m = max(max(l * l, u * u) for l, u in bounds)
    return float(np.abs(delta).sum()) * (m + 1.0) ** 2 / 2 ** (2 * nu - 2)


@dataclass
class RelaxModel:
    """Mixed-binary convex relaxation over columns ``names``.

    ``objective_matrix`` acts on ``objective_index``; every quadratic row and
    the objective matrix are PSD.
    """

    names: list[str]
    lower: np.ndarray
    upper: np.ndarray
    binary: np.ndarray
    rows: list[LinearRow]
    quad_rows: list[QuadRow]
    objective_index: tuple
    objective_matrix: np.ndarray
    objective_linear: np.ndarray
    objective_constant: float
    mode: str
    nus: tuple[int, ...]
    x_index: np.ndarray
    y_index: np.ndarray
    block_index: list[dict[str, int]]

    @property
    def n_cols(self) -> int:
        return len(self.names)

    def objective(self, v: np.ndarray) -> float:
        sub = v[list(self.objective_index)]
        return float(sub @ self.objective_matrix @ sub + self.objective_linear @ v + self.objective_constant)


def choose_mode(cinst) -> str:
    """"D" when no constraint carries an off-diagonal quadratic term."""
    for Q in cinst.instance.Q[1:]:
        if np.any(Q - np.diag(np.diag(Q))):
            return "Dplus"
    return "D"


def _is_psd(P: np.ndarray) -> bool:
    from .convexify import min_eigenvalue

    return P.size == 0 or min_eigenvalue(P) >= -1e-8


def assemble_relaxation(cinst, nus: Sequence[int], mode: str = "auto") -> RelaxModel:
    """Relaxation of the perturbed problem with one block per variable."""
    inst = cinst.instance
    n = inst.n
    nus = tuple(int(v) for v in nus)
    if len(nus) != n:
        raise ValueError(f"need {n} levels, got {len(nus)}")
    if any(v < 0 for v in nus):
        raise ValueError("levels must be nonnegative")
    if mode == "auto":
        mode = choose_mode(cinst)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")

    names = [f"x{j}" for j in range(n)] + [f"y{j}" for j in range(n)]
    lower = list(inst.lower) + [0.0] * n
    upper = list(inst.upper) + [max(a * a, b * b) for a, b in zip(inst.lower, inst.upper)]
    binary = [False] * (2 * n)
    rows: list[LinearRow] = []
    quad_rows: list[QuadRow] = []
    block_index = []

    for j in range(n):
        blk = build_block(inst.lower[j], inst.upper[j], nus[j], mode)
        index = {"x": j, "y": n + j}
        for v in blk.variables:
            if v in index:
                continue
            index[v] = len(names)
            names.append(f"b{j}.{v}")
            lower.append(blk.lower[v])
            upper.append(blk.upper[v])
            binary.append(v in blk.binaries)
        for row in blk.rows:
            rows.append(LinearRow({index[k]: c for k, c in row.coeffs.items()}, row.sense, row.rhs, f"b{j}.{row.label}"))
        for q in blk.quad_rows:
            quad_rows.append(
                QuadRow(
                    tuple(index[k] for k in q.index),
                    q.matrix,
                    {index[k]: c for k, c in q.linear.items()},
                    q.rhs,
                    f"b{j}.{q.label}",
                )
            )
        block_index.append(index)

    xs = tuple(range(n))
    for i in range(1, inst.m + 1):
        P = cinst.perturbed[i]
        if not _is_psd(P):
            raise ValueError(f"perturbed matrix of constraint {i} is not PSD")
        lin = {j: float(inst.c[i][j]) for j in range(n) if inst.c[i][j] != 0}
        for j in range(n):
            if cinst.delta[i][j] != 0:
                lin[n + j] = lin.get(n + j, 0.0) - float(cinst.delta[i][j])
        if np.any(P):
            quad_rows.append(QuadRow(xs, P, lin, float(inst.rhs[i - 1]), f"con{i}"))
        else:
            rows.append(LinearRow(lin, "<=", float(inst.rhs[i - 1]), f"con{i}"))

    P0 = cinst.perturbed[0]
    if not _is_psd(P0):
        raise ValueError("perturbed objective matrix is not PSD")
    obj_lin = np.zeros(len(names))
    obj_lin[:n] = inst.c[0]
    obj_lin[n : 2 * n] = -cinst.delta[0]

    return RelaxModel(
        names=names,
        lower=np.array(lower, dtype=float),
        upper=np.array(upper, dtype=float),
        binary=np.array(binary, dtype=bool),
        rows=rows,
        quad_rows=quad_rows,
        objective_index=xs,
        objective_matrix=P0,
        objective_linear=obj_lin,
        objective_constant=float(inst.constant),
        mode=mode,
        nus=nus,
        x_index=np.arange(n),
        y_index=np.arange(n, 2 * n),
        block_index=block_index,
    )
