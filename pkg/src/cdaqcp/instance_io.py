"""Problem instances: JSON and boxqp readers, JSON writer, fixed-variable elimination.

JSON schema::

    {"name": str, "n": int, "m": int,
     "bounds": [[l, u], ...],
     "objective": {"Q": [[i, j, v], ...], "c": [...], "constant": float?},
     "constraints": [{"Q": [[i, j, v], ...], "c": [...], "rhs": float}, ...]}

A triplet ``[i, j, v]`` with ``i != j`` is the whole coefficient of the
bilinear term ``v * x_i * x_j``; it is stored as two symmetric halves.
Repeated triplets add up.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

SYM_TOL = 1e-12
FIXED_TOL = 1e-12


class InstanceError(ValueError):
    """Malformed instance data; the message names the offending field."""


@dataclass
class QcpInstance:
    """min x'Q[0]x + c[0]'x + constant  s.t.  x'Q[i]x + c[i]'x <= rhs[i-1], lower <= x <= upper."""

    n: int
    m: int
    Q: list[np.ndarray]
    c: list[np.ndarray]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    name: str = "instance"
    constant: float = 0.0

    def __post_init__(self):
        self.Q = [np.asarray(q, dtype=float).reshape(self.n, self.n) for q in self.Q]
        self.c = [np.asarray(v, dtype=float).reshape(self.n) for v in self.c]
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(self.m)
        self.lower = np.asarray(self.lower, dtype=float).reshape(self.n)
        self.upper = np.asarray(self.upper, dtype=float).reshape(self.n)
        if len(self.Q) != self.m + 1 or len(self.c) != self.m + 1:
            raise InstanceError(f"expected {self.m + 1} quadratics, got {len(self.Q)} matrices / {len(self.c)} vectors")
        for j in range(self.n):
            if not (math.isfinite(self.lower[j]) and math.isfinite(self.upper[j])):
                raise InstanceError(f"bounds[{j}]: infinite bound")
            if self.lower[j] > self.upper[j]:
                raise InstanceError(f"bounds[{j}]: lower {self.lower[j]} > upper {self.upper[j]}")
        for i, q in enumerate(self.Q):
            if np.any(np.abs(q - q.T) > SYM_TOL):
                raise InstanceError(f"quadratic {i}: matrix is not symmetric")

    def quad_value(self, i: int, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q[i] @ x + self.c[i] @ x)

    def objective(self, x) -> float:
        return self.quad_value(0, x) + self.constant

    def constraint_values(self, x) -> np.ndarray:
        """Left-hand side minus rhs for every constraint (<= 0 is feasible)."""
        return np.array([self.quad_value(i, x) - self.rhs[i - 1] for i in range(1, self.m + 1)])

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        box = max(float(np.max(self.lower - x, initial=0.0)), float(np.max(x - self.upper, initial=0.0)))
        g = self.constraint_values(x)
        return max(box, float(g.max(initial=0.0)))


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if isinstance(value, str) and value.strip().lstrip("+-").lower() in ("inf", "infinity"):
            raise InstanceError(f"{where}: infinite bound")
        raise InstanceError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _triplets(entries: Any, n: int, where: str) -> np.ndarray:
    if not isinstance(entries, list):
        raise InstanceError(f"{where}: expected a list of [i, j, value] triplets")
    Q = np.zeros((n, n))
    for k, t in enumerate(entries):
        loc = f"{where}[{k}]"
        if not isinstance(t, list) or len(t) != 3:
            raise InstanceError(f"{loc}: expected [i, j, value]")
        i, j = t[0], t[1]
        if not (isinstance(i, int) and isinstance(j, int)) or isinstance(i, bool) or isinstance(j, bool):
            raise InstanceError(f"{loc}: indices must be integers")
        if not (0 <= i < n and 0 <= j < n):
            raise InstanceError(f"{loc}: index out of range for n={n}")
        v = _number(t[2], loc)
        if not math.isfinite(v):
            raise InstanceError(f"{loc}: coefficient must be finite")
        if i == j:
            Q[i, i] += v
        else:
            Q[i, j] += 0.5 * v
            Q[j, i] += 0.5 * v
    return Q


def _vector(entries: Any, n: int, where: str) -> np.ndarray:
    if entries is None:
        return np.zeros(n)
    if not isinstance(entries, list) or len(entries) != n:
        raise InstanceError(f"{where}: expected a list of {n} numbers")
    out = np.array([_number(v, f"{where}[{k}]") for k, v in enumerate(entries)])
    if not np.all(np.isfinite(out)):
        raise InstanceError(f"{where}: entries must be finite")
    return out


def from_dict(data: Any) -> QcpInstance:
    if not isinstance(data, dict):
        raise InstanceError("top level: expected an object")
    for key in ("n", "bounds", "objective"):
        if key not in data:
            raise InstanceError(f"top level: missing field {key!r}")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise InstanceError("n: expected a nonnegative integer")
    constraints = data.get("constraints", [])
    if not isinstance(constraints, list):
        raise InstanceError("constraints: expected a list")
    m = data.get("m", len(constraints))
    if m != len(constraints):
        raise InstanceError(f"m: declared {m} but {len(constraints)} constraints given")

    bounds = data["bounds"]
    if not isinstance(bounds, list) or len(bounds) != n:
        raise InstanceError(f"bounds: expected {n} [l, u] pairs")
    lower, upper = np.zeros(n), np.zeros(n)
    for j, b in enumerate(bounds):
        if not isinstance(b, list) or len(b) != 2:
            raise InstanceError(f"bounds[{j}]: expected [l, u]")
        lower[j] = _number(b[0], f"bounds[{j}][0]")
        upper[j] = _number(b[1], f"bounds[{j}][1]")
        if not (math.isfinite(lower[j]) and math.isfinite(upper[j])):
            raise InstanceError(f"bounds[{j}]: infinite bound")
        if lower[j] > upper[j]:
            raise InstanceError(f"bounds[{j}]: lower {lower[j]} > upper {upper[j]}")

    obj = data["objective"]
    if not isinstance(obj, dict):
        raise InstanceError("objective: expected an object")
    Qs = [_triplets(obj.get("Q", []), n, "objective.Q")]
    cs = [_vector(obj.get("c"), n, "objective.c")]
    constant = _number(obj.get("constant", 0.0), "objective.constant")
    rhs = []
    for i, con in enumerate(constraints):
        where = f"constraints[{i}]"
        if not isinstance(con, dict):
            raise InstanceError(f"{where}: expected an object")
        if "rhs" not in con:
            raise InstanceError(f"{where}: missing field 'rhs'")
        Qs.append(_triplets(con.get("Q", []), n, f"{where}.Q"))
        cs.append(_vector(con.get("c"), n, f"{where}.c"))
        r = _number(con["rhs"], f"{where}.rhs")
        if not math.isfinite(r):
            raise InstanceError(f"{where}.rhs: must be finite")
        rhs.append(r)
    name = data.get("name", "instance")
    if not isinstance(name, str):
        raise InstanceError("name: expected a string")
    return QcpInstance(n, m, Qs, cs, np.array(rhs), lower, upper, name, constant)


def parse_json(text: str) -> QcpInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    return from_dict(data)


def _to_triplets(Q: np.ndarray) -> list[list]:
    out = []
    n = Q.shape[0]
    for i in range(n):
        if Q[i, i] != 0:
            out.append([i, i, float(Q[i, i])])
        for j in range(i + 1, n):
            if Q[i, j] != 0:
                out.append([i, j, float(2.0 * Q[i, j])])
    return out


def to_dict(inst: QcpInstance) -> dict:
    obj = {"Q": _to_triplets(inst.Q[0]), "c": [float(v) for v in inst.c[0]]}
    if inst.constant:
        obj["constant"] = float(inst.constant)
    return {
        "name": inst.name,
        "n": inst.n,
        "m": inst.m,
        "bounds": [[float(a), float(b)] for a, b in zip(inst.lower, inst.upper)],
        "objective": obj,
        "constraints": [
            {"Q": _to_triplets(inst.Q[i]), "c": [float(v) for v in inst.c[i]], "rhs": float(inst.rhs[i - 1])}
            for i in range(1, inst.m + 1)
        ],
    }


def serialize(inst: QcpInstance) -> str:
    return json.dumps(to_dict(inst), indent=1)


def parse_boxqp(text: str, negate: bool = False, name: str = "boxqp") -> QcpInstance:
    """Read ``n``, then ``c`` (n numbers), then n rows of Q.

    The file describes min 1/2 x'Qx + c'x over [0, 1]^n; ``negate`` flips
    the sign for files written in max form.
    """
    lines = [ln.replace("−", "-").split() for ln in text.splitlines()]
    numbered = [(k + 1, toks) for k, toks in enumerate(lines) if toks]

    def floats(lineno: int, toks: list[str]) -> list[float]:
        try:
            return [float(t) for t in toks]
        except ValueError:
            raise InstanceError(f"line {lineno}: non-numeric token") from None

    if not numbered:
        raise InstanceError("line 1: empty file")
    lineno, toks = numbered[0]
    if len(toks) != 1:
        raise InstanceError(f"line {lineno}: expected a single integer n")
    try:
        n = int(toks[0])
    except ValueError:
        raise InstanceError(f"line {lineno}: non-numeric token") from None
    if n < 1:
        raise InstanceError(f"line {lineno}: n must be positive")
    if len(numbered) != n + 2:
        raise InstanceError(f"expected {n + 2} non-empty lines, found {len(numbered)}")
    lineno, toks = numbered[1]
    c = floats(lineno, toks)
    if len(c) != n:
        raise InstanceError(f"line {lineno}: expected {n} entries of c, found {len(c)}")
    Q = np.zeros((n, n))
    for r in range(n):
        lineno, toks = numbered[2 + r]
        row = floats(lineno, toks)
        if len(row) != n:
            raise InstanceError(f"line {lineno}: expected {n} entries in row {r} of Q, found {len(row)}")
        Q[r] = row
    sign = -1.0 if negate else 1.0
    Qs = [sign * (Q + Q.T) / 4.0]
    cs = [sign * np.array(c)]
    return QcpInstance(n, 0, Qs, cs, np.zeros(0), np.zeros(n), np.ones(n), name)


def load(path: str, negate: bool = False) -> QcpInstance:
    """Dispatch on file extension: ``.json`` or anything else as boxqp text."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        inst = parse_json(text)
        if negate:
            inst.Q = [-inst.Q[0]] + inst.Q[1:]
            inst.c = [-inst.c[0]] + inst.c[1:]
            inst.constant = -inst.constant
        return inst
    import os

    stem = os.path.splitext(os.path.basename(path))[0]
    return parse_boxqp(text, negate=negate, name=stem)


@dataclass
class Reduction:
    """Maps points of a reduced instance back to the original variable space."""

    n_full: int
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray

    def restore(self, x_reduced) -> np.ndarray:
        x = np.zeros(self.n_full)
        x[self.free] = np.asarray(x_reduced, dtype=float)
        x[self.fixed] = self.fixed_values
        return x


def eliminate_fixed(inst: QcpInstance) -> tuple[QcpInstance, Reduction]:
    """Substitute variables whose bounds coincide and fold them into c and rhs."""
    fixed_mask = (inst.upper - inst.lower) <= FIXED_TOL
    free = np.flatnonzero(~fixed_mask)
    fixed = np.flatnonzero(fixed_mask)
    xf = inst.lower[fixed].copy()
    red = Reduction(inst.n, free, fixed, xf)
    if len(fixed) == 0:
        return inst, red
    Qs, cs, consts = [], [], []
    for Q, c in zip(inst.Q, inst.c):
        Qs.append(Q[np.ix_(free, free)].copy())
        cs.append(c[free] + 2.0 * Q[np.ix_(free, fixed)] @ xf)
        consts.append(float(xf @ Q[np.ix_(fixed, fixed)] @ xf + c[fixed] @ xf))
    reduced = QcpInstance(
        len(free),
        inst.m,
        Qs,
        cs,
        inst.rhs - np.array(consts[1:]),
        inst.lower[free],
        inst.upper[free],
        inst.name,
        inst.constant + consts[0],
    )
    return reduced, red


def write_solution(path: str, state, name: str) -> None:
    """Solution file: name, status, bounds (null when infinite), x, iterations."""

    def num(v):
        return float(v) if v is not None and math.isfinite(v) else None

    doc = {
        "name": name,
        "status": state.status,
        "tau_lower": num(state.tau_lower),
        "tau_upper": num(state.tau_upper),
        "x": None if state.incumbent is None else [float(v) for v in state.incumbent],
        "iterations": [
            {k: (num(v) if isinstance(v, float) else v) for k, v in rec.items()} for rec in state.log
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
