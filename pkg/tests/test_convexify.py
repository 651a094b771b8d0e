import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cdaqcp.convexify import convexify_instance, jacobi_eigenvalues, min_eigenvalue, perturbation
from cdaqcp.oracle import circle_instance, random_qcp
from cdaqcp.instance_io import parse_boxqp


def charpoly_roots(A):
    """Eigenvalues as roots of the characteristic polynomial (Faddeev-LeVerrier)."""
    n = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(A @ M) / k)
    return np.sort(np.roots(coeffs).real)


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.array([[0.0, 1], [1, 0]])) == pytest.approx(-1, abs=1e-12)
    assert min_eigenvalue(np.diag([2.0, 3.0])) == 2.0


def test_jacobi_matches_characteristic_polynomial():
    rng = np.random.default_rng(0)
    for _ in range(20):
        B = rng.uniform(-2, 2, (5, 5))
        A = 0.5 * (B + B.T)
        assert np.allclose(np.sort(jacobi_eigenvalues(A)), charpoly_roots(A), atol=1e-8)


def test_rejects_asymmetric():
    with pytest.raises(ValueError):
        min_eigenvalue(np.array([[0.0, 1], [0, 0]]))


def test_perturbation_examples():
    assert np.array_equal(perturbation(np.diag([-1.0, 2.0])), [1, 0])
    assert np.array_equal(perturbation(np.diag([-1.0, 2.0]), paper_exact_diagonal=True), [1, -2])
    assert np.allclose(perturbation(np.array([[0.0, 1], [1, 0]])), [1 + 1e-9] * 2, rtol=0, atol=1e-15)
    assert np.array_equal(perturbation(np.array([[2.0, 1], [1, 2]])), [0, 0])


def test_convexify_examples():
    c = convexify_instance(circle_instance())
    assert np.array_equal(c.delta[1], [1, 1]) and not np.any(c.delta[0])
    box = convexify_instance(parse_boxqp("2\n0 0\n0 -1\n-1 0\n"))
    assert np.allclose(box.delta[0], [0.5 + 1e-9] * 2, rtol=0, atol=1e-15)
    for seed in range(5):
        inst = random_qcp(seed)
        inst.Q = [q @ q.T for q in inst.Q]
        assert convexify_instance(inst).is_convex


symmetric = arrays(np.float64, (4, 4), elements=st.floats(-5, 5)).map(lambda B: 0.5 * (B + B.T))


@settings(max_examples=200, deadline=None)
@given(symmetric)
def test_psd_certificate_and_idempotence(Q):
    d = perturbation(Q)
    P = Q + np.diag(d)
    assert np.linalg.eigvalsh(P).min() >= -1e-8
    assert not np.any(perturbation(P))


@settings(max_examples=200, deadline=None)
@given(symmetric, arrays(np.float64, 4, elements=st.floats(-3, 3)))
def test_objective_equivalence(Q, x):
    d = perturbation(Q)
    y = x * x
    assert x @ (Q + np.diag(d)) @ x - d @ y == pytest.approx(x @ Q @ x, abs=1e-9 * (1 + np.abs(Q).sum() * 9))
