"""The nine acceptance criteria, each at its stated size and tolerance.

Every test records one line; the terminal summary prints them together.
"""
import pytest

from cdaqcp import verify

from conftest import ACCEPTANCE_LINES


def record(number, result, budget=None):
    ok = result.passed and (budget is None or result.seconds < budget)
    limit = "" if budget is None else f" [budget {budget:g}s]"
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} {number}. {result.name}: {result.detail} ({result.seconds:.2f}s){limit}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def test_1_containment():
    assert record(1, verify.check_containment(boxes=100, nus=range(1, 7), samples=100, tol=1e-8), budget=5)


def test_2_error_bounds():
    assert record(2, verify.check_error_bounds(samples=10_000, nus=range(2, 7), tol=1e-8), budget=10)


def test_3_disjunctive_equivalence():
    assert record(3, verify.check_equivalence(nus=range(1, 5)), budget=30)


def test_4_secant_identities():
    assert record(4, verify.check_identities(draws=1000, tol=1e-10), budget=1)


def test_5_oracle_bracketing():
    # each instance is held to 60 s inside the check
    assert record(5, verify.check_bracketing(count=20, time_limit=60.0))


def test_6_circle_convergence():
    assert record(6, verify.check_circle(tol=1e-3))


def test_7_monotone_refinement():
    assert record(7, verify.check_monotone(count=10, max_nu=4, tol=1e-8))


def test_8_metric_formulas():
    assert record(8, verify.check_metrics())


def test_9_variable_budget():
    assert record(9, verify.check_budget(max_nu=10))
