import itertools
import json
import math

import numpy as np
import pytest

from cdaqcp.formulation import build_block, constants, lift_arrays
from cdaqcp.instance_io import QcpInstance, parse_boxqp
from cdaqcp.oracle import (
    check_projection_equivalence,
    circle_instance,
    enumerate_disjunction,
    grid_optimum,
    knot_values,
    random_qcp,
    region_violation,
    sample_relaxation,
    sample_triangle,
)


def test_grid_examples():
    res = grid_optimum(parse_boxqp("1\n0.8\n-2.0\n"), 0.25)
    assert res.feasible and res.value == pytest.approx(-0.2) and res.point[0] == 1.0
    assert res.lattice_size == 5


def test_grid_circle():
    step = 0.005
    res = grid_optimum(circle_instance(), step)
    # the best lattice point sits on an axis, within one step of sqrt(0.5)
    assert math.sqrt(0.5) <= res.value <= math.sqrt(0.5) + step
    assert min(res.point) == 0.0


def test_grid_infeasible_and_guards():
    empty = QcpInstance(1, 1, [np.zeros((1, 1)), np.ones((1, 1))], [np.zeros(1), np.zeros(1)], [-1.0], [0], [1])
    assert not grid_optimum(empty, 0.1).feasible
    five = QcpInstance(5, 0, [np.eye(5)], [np.zeros(5)], [], np.zeros(5), np.ones(5))
    with pytest.raises(ValueError):
        grid_optimum(five, 0.5)
    big = QcpInstance(4, 0, [np.eye(4)], [np.zeros(4)], [], np.zeros(4), np.ones(4))
    with pytest.raises(ValueError):
        grid_optimum(big, 0.001)
    with pytest.raises(ValueError):
        grid_optimum(big, 0.0)


def test_grid_matches_plain_loop():
    inst = random_qcp(2)
    step = 0.1
    axes = [np.append(np.arange(l, u, step), u) for l, u in zip(inst.lower, inst.upper)]
    best = math.inf
    for p in itertools.product(*axes):
        x = np.array(p)
        if np.all(inst.constraint_values(x) <= 1e-9):
            best = min(best, inst.objective(x))
    assert grid_optimum(inst, step).value == pytest.approx(best, abs=1e-12)


def test_enumerate_examples():
    out = enumerate_disjunction(-1, 1, 1)
    pairs = sorted(tuple(sorted(np.round(knot_pair(t), 12))) for _, t in out)
    assert pairs == [(-1.0, 0.0), (0.0, 1.0)]
    assert np.allclose(knot_values(-1, 1, 2), [-1, 1 - math.sqrt(2), 0, math.sqrt(2) - 1, 1])
    for nu in range(1, 7):
        out = enumerate_disjunction(-0.7, 2.2, nu)
        assert len(out) == 2**nu and len({z for z, _ in out}) == 2**nu
    for bad in (0, 9):
        with pytest.raises(ValueError):
            enumerate_disjunction(-1, 1, bad)


def knot_pair(tri):
    V = tri.vertices()
    return V[0][0], V[1][0]


@pytest.mark.parametrize("l,u,nu,mode", [(-1, 1, 2, "D"), (0, 3, 3, "Dplus"), (-2, -0.5, 4, "D"), (-1, 2, 3, "Dplus")])
def test_equivalence_holds(l, u, nu, mode):
    rep = check_projection_equivalence(l, u, nu, mode)
    assert rep.ok, rep.to_json()
    data = json.loads(rep.to_json())
    assert data["checked"] >= 200 * 2**nu // 2


@pytest.mark.parametrize("which", ["C", "C_list"])
def test_mutation_is_caught(which):
    C, Cs = constants(-1, 1, 3)
    kw = {"C": 0.5 * C} if which == "C" else {"C_list": [0.5 * c for c in Cs]}
    rep = check_projection_equivalence(-1, 1, 3, "D", **kw)
    assert not rep.ok and rep.disagreements


@pytest.mark.parametrize("l,u", [(-1, 1), (0, 3), (-2, -0.5)])
def test_union_cover(l, u):
    for nu in range(1, 5):
        tris = enumerate_disjunction(l, u, nu)
        P = sample_relaxation(l, u, nu, 2000)
        inside = np.min([region_violation(P[:, 0], P[:, 1], t, l, u, "D") for _, t in tris], axis=0)
        assert np.all(inside <= 1e-9)
        blk = build_block(l, u, nu, "D")
        for z, tri in tris:
            S = sample_triangle(tri, 100)
            S = S[region_violation(S[:, 0], S[:, 1], tri, l, u, "D") <= -1e-7]
            assert np.all(blk.violation(lift_arrays(S[:, 0], S[:, 1], l, u, nu, z)) <= 1e-7)


def test_sampler_is_reproducible_and_inside():
    _, tri = enumerate_disjunction(0, 3, 2)[1]
    a, b = sample_triangle(tri, 300), sample_triangle(tri, 300)
    assert np.array_equal(a, b)
    assert np.all(tri.violation(a[:, 0], a[:, 1]) <= 1e-9)


def test_random_qcp_shape():
    for seed in range(30):
        inst = random_qcp(seed)
        assert 1 <= inst.n <= 3 and inst.m <= 3
        assert np.all(inst.lower >= -2) and np.all(inst.upper <= 2) and np.all(inst.lower < inst.upper)
        assert all(np.abs(q).max(initial=0) <= 2 for q in inst.Q)
    assert np.array_equal(random_qcp(7).Q[0], random_qcp(7).Q[0])
