import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdaqcp.convexify import convexify_instance
from cdaqcp.formulation import (
    assemble_relaxation,
    build_block,
    choose_mode,
    constants,
    lift_arrays,
    lift_witness,
    violation_bound,
)
from cdaqcp.geometry import error_bounds
from cdaqcp.instance_io import QcpInstance, parse_boxqp
from cdaqcp.milp.simplex import LpProblem, LpStatus, solve_lp
from cdaqcp.oracle import circle_instance, enumerate_disjunction, sample_relaxation, sample_triangle


def test_constants_examples():
    C, Cs = constants(-1, 1, 2)
    assert C == 1.0 and np.allclose(Cs, [math.sin(math.pi / 4)])
    C, Cs = constants(0, 2, 1)
    assert C == 2.5 and Cs == []
    assert math.isclose(constants(-1, 1, 3)[1][1], math.sin(math.pi / 8))


def test_block_counts_example():
    blk = build_block(-1, 1, 2, "D")
    assert sorted(blk.continuous) == sorted(["x", "y", "xi1", "eta1", "xi2", "eta2", "lam1_1", "lam1_2", "lam2_1", "lam2_2"])
    assert len(blk.binaries) == 2


@pytest.mark.parametrize("mode", ["D", "Dplus"])
def test_budget(mode):
    for nu in range(11):
        blk = build_block(-0.5, 2.0, nu, mode)
        assert len(blk.binaries) == nu
        assert len(blk.continuous) <= 2 + 4 * nu


def _feasible(blk, x, y):
    return blk.violation({"x": x, "y": y}) <= 1e-12


def test_level_zero_polyhedra():
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-0.2, 1.2, (2, 5000))
    d0 = build_block(0, 1, 0, "D")
    ref = (x >= 0) & (x <= 1) & (y >= 0) & (y <= x) & (y >= 2 * x - 1)
    assert np.array_equal(_feasible(d0, x, y), ref)
    p0 = build_block(0, 1, 0, "Dplus")
    ref = (x >= 0) & (x <= 1) & (y >= x * x) & (y <= x)
    assert np.array_equal(_feasible(p0, x, y), ref)
    assert len(build_block(-1, 2, 0, "D").rows) == 3  # bounds live on x; three linear rows remain


def test_block_rejects_bad_box():
    with pytest.raises(ValueError):
        build_block(1, 0, 2, "D")


def test_lift_witness_examples():
    w = lift_witness(1.0, -1, 1, 1)
    assert np.allclose([w["xi1"], w["eta1"], w["z1"]], [0, 1, 1], atol=1e-15)
    w = lift_witness(-1.0, -1, 1, 1)
    assert np.allclose([w["xi1"], w["eta1"], w["z1"]], [0, 1, 0], atol=1e-15)
    w = lift_witness(0.0, -1, 1, 1)
    assert np.allclose([w["xi1"], w["eta1"], w["z1"]], [0.5, 0, 1], atol=1e-15)
    with pytest.raises(ValueError):
        lift_witness(2.0, -1, 1, 1)


def test_violation_bound_examples():
    assert violation_bound([1, 1], [(0, 1), (0, 1)], 3) == 0.5
    assert violation_bound([0, 0], [(0, 1), (0, 1)], 5) == 0.0
    assert violation_bound([2], [(-2, 2)], 4) == 0.78125


boxes = st.tuples(st.floats(-3, 3), st.floats(-3, 3)).map(sorted).filter(lambda b: b[1] - b[0] > 1e-3)


@settings(max_examples=60, deadline=None)
@given(boxes, st.integers(1, 6))
def test_containment(box, nu):
    l, u = box
    x = np.linspace(l, u, 100)
    vals = lift_arrays(x, x * x, l, u, nu)
    for mode in ("D", "Dplus"):
        assert build_block(l, u, nu, mode).violation(vals).max() <= 1e-8


@pytest.mark.parametrize("l,u", [(-1, 1), (0, 3), (-2, -0.5)])
def test_dplus_points_are_d_feasible(l, u):
    for nu in (1, 2, 3):
        d, p = build_block(l, u, nu, "D"), build_block(l, u, nu, "Dplus")
        for z, tri in enumerate_disjunction(l, u, nu):
            pts = sample_triangle(tri, 400)
            pts = pts[pts[:, 1] >= pts[:, 0] ** 2]
            vals = lift_arrays(pts[:, 0], pts[:, 1], l, u, nu, z)
            ok = p.violation(vals) <= 1e-9
            assert ok.any()
            assert np.all(d.violation({k: v[ok] for k, v in vals.items()}) <= 1e-9)


@pytest.mark.parametrize("l,u", [(-1, 1), (0, 3), (-2, -0.5)])
def test_error_bounds_on_samples(l, u):
    for nu in range(2, 7):
        P = sample_relaxation(l, u, nu, 2000)
        sqrt_gap, square_gap = error_bounds(l, u, nu)
        assert np.abs(P[:, 1] - P[:, 0] ** 2).max() <= square_gap + 1e-8
        assert np.abs(np.sqrt(np.maximum(P[:, 1], 0)) - np.abs(P[:, 0])).max() <= sqrt_gap + 1e-8


def _block_lp(blk, objective, fixed):
    names = blk.variables
    A, rhs, eq = blk.row_arrays()
    lb = np.array([blk.lower[v] for v in names])
    ub = np.array([blk.upper[v] for v in names])
    for v, val in fixed.items():
        lb[names.index(v)] = ub[names.index(v)] = val
    c = np.zeros(len(names))
    for v, coef in objective.items():
        c[names.index(v)] = coef
    return solve_lp(LpProblem(c, A, ["==" if e else "<=" for e in eq], rhs, lb, ub))


@pytest.mark.parametrize("l,u,nu", [(-1, 1, 2), (0, 3, 3), (-2, -0.5, 2)])
def test_z_forces_lambda(l, u, nu):
    blk = build_block(l, u, nu, "D")
    for j in range(1, nu + 1):
        res = _block_lp(blk, {f"lam{j}_1": -1.0}, {f"z{j}": 1.0})
        assert res.status == LpStatus.OPTIMAL and -res.value <= 1e-9
        res = _block_lp(blk, {f"lam{j}_2": -1.0}, {f"z{j}": 0.0})
        assert res.status == LpStatus.OPTIMAL and -res.value <= 1e-9


def test_assemble_circle():
    cinst = convexify_instance(circle_instance())
    model = assemble_relaxation(cinst, (0, 0))
    assert model.mode == "D"
    con = [r for r in model.rows if r.label == "con1"]
    assert len(con) == 1
    assert con[0].coeffs == {2: -1.0, 3: -1.0} and con[0].rhs == -0.5
    assert not model.quad_rows and not np.any(model.objective_matrix)


def test_assemble_convex_instance_has_no_y_terms():
    inst = QcpInstance(2, 1, [np.eye(2), np.diag([1.0, 2.0])], [np.ones(2), np.zeros(2)], [1.0], [-1, -1], [1, 1])
    model = assemble_relaxation(convexify_instance(inst), (1, 1))
    assert not np.any(model.objective_linear[model.y_index])
    for q in model.quad_rows:
        if q.label.startswith("con"):
            assert not set(q.linear) & set(model.y_index.tolist())


def test_mode_choice():
    boxqp = parse_boxqp("2\n0 0\n0 -1\n-1 0\n")
    assert choose_mode(convexify_instance(boxqp)) == "D"
    dense = QcpInstance(2, 1, [np.zeros((2, 2)), np.array([[0, 1], [1, 0.0]])], [np.ones(2), np.zeros(2)], [0.5], [0, 0], [1, 1])
    assert choose_mode(convexify_instance(dense)) == "Dplus"


def test_assemble_rejects_bad_levels():
    cinst = convexify_instance(circle_instance())
    with pytest.raises(ValueError):
        assemble_relaxation(cinst, (0,))
    with pytest.raises(ValueError):
        assemble_relaxation(cinst, (0, -1))
