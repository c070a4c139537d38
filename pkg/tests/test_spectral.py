from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessquot.errors import NotAdmissibleError
from hessquot.spectral import (
    SymMatrix,
    admissibility,
    derivative_from_decomposition,
    eigen_sym,
    operator_derivative,
    operator_value,
)
from hessquot.symmetric import HessianPair, quotient_gradient_unchecked, sigma_all

from oracles import operator_derivative_fd, operator_fd_error, random_admissible_matrices


def test_diagonal_and_swap_examples():
    d = eigen_sym(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(d.eigenvalues, [3, 1])
    np.testing.assert_allclose(np.abs(d.basis), np.eye(2))
    d = eigen_sym([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(d.eigenvalues, [1, -1], atol=1e-15)


def test_symmetrised_on_construction():
    m = SymMatrix([[1.0, 2.0], [0.0, 1.0]])
    assert m.entries[0, 1] == m.entries[1, 0] == 1.0
    with pytest.raises(ValueError):
        SymMatrix([[1.0, np.inf], [0.0, 1.0]])
    with pytest.raises(ValueError):
        SymMatrix(np.zeros((2, 3)))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 8])
def test_decomposition_against_lapack(n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=(500, n, n))
    a = a + np.swapaxes(a, 1, 2)
    d = eigen_sym(a)
    q = d.basis
    gram = np.einsum("bai,baj->bij", q, q)
    assert np.max(np.abs(gram - np.eye(n))) <= 1e-12
    rel = np.max(np.abs(d.reconstruct() - a), axis=(1, 2)) / np.max(np.abs(a), axis=(1, 2))
    assert np.max(rel) <= 1e-10
    ref = np.linalg.eigvalsh(a)[:, ::-1]
    assert np.max(np.abs(ref - d.eigenvalues)) <= 1e-12 * np.max(np.abs(a))
    assert np.all(np.diff(d.eigenvalues, axis=1) <= 0)


def test_repeated_eigenvalues():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    a = q @ np.diag([2.0, 2.0, 2.0, -1.0]) @ q.T
    d = eigen_sym(a)
    np.testing.assert_allclose(d.eigenvalues, [2, 2, 2, -1], atol=1e-13)
    np.testing.assert_allclose(d.reconstruct(), a, atol=1e-13)


def test_operator_value_examples():
    a0 = 0.7
    assert operator_value(2 * a0 * np.eye(2), HessianPair(2, 0, 2)) == pytest.approx(4 * a0**2)
    for n, k, l in [(3, 2, 1), (4, 4, 2), (5, 1, 0)]:
        assert operator_value(np.eye(n), HessianPair(k, l, n)) == pytest.approx(comb(n, k) / comb(n, l))
    with pytest.raises(NotAdmissibleError):
        operator_value(np.diag([-1.0, 0.5]), HessianPair(2, 0, 2))
    with pytest.raises(ValueError):
        operator_value(np.eye(3), HessianPair(2, 0, 2))


def test_spectral_invariance():
    rng = np.random.default_rng(2)
    p = HessianPair(3, 1, 4)
    dmat = np.diag([2.0, 1.5, 0.7, -0.2])
    base = operator_value(dmat, p)
    for _ in range(20):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        assert operator_value(q.T @ dmat @ q, p) == pytest.approx(base, rel=1e-10)


def test_derivative_examples():
    a, b = 1.3, 0.4
    np.testing.assert_allclose(operator_derivative(np.diag([a, b]), HessianPair(2, 0, 2)), np.diag([b, a]), atol=1e-15)
    np.testing.assert_allclose(operator_derivative(np.eye(3), HessianPair(1, 0, 3)), np.eye(3), atol=1e-15)


@pytest.mark.parametrize("n,k,l", [(2, 2, 1), (3, 2, 0), (3, 3, 1), (4, 2, 1), (4, 4, 3), (5, 3, 2)])
def test_derivative_matches_finite_differences(n, k, l):
    assert operator_fd_error(n, k, l, count=200, seed=n + k + l) <= 1e-6


@pytest.mark.parametrize("n,k,l", [(2, 2, 0), (3, 2, 1), (4, 3, 0), (4, 4, 2)])
def test_derivative_at_multiple_of_identity(n, k, l):
    p = HessianPair(k, l, n)
    a = 1.7 * np.eye(n)
    d = operator_derivative(a, p)
    g = quotient_gradient_unchecked(np.full(n, 1.7), k, l)[0]
    np.testing.assert_allclose(d, g * np.eye(n), atol=1e-14)
    np.testing.assert_allclose(operator_derivative_fd(a, p), d, rtol=0, atol=1e-6 * g)


def test_euler_trace_identity():
    rng = np.random.default_rng(4)
    for n in (2, 3, 4, 5):
        for k in range(1, n + 1):
            a = rng.normal(size=(50, n, n))
            a = a + np.swapaxes(a, 1, 2)
            lam = eigen_sym(a).eigenvalues
            # l = 0 quotient is sigma_k itself; derivative needs no admissibility
            d = derivative_from_decomposition(eigen_sym(a), k, 0)
            tr = np.einsum("bij,bji->b", d, a)
            sk = sigma_all(lam, k)[:, k]
            assert np.max(np.abs(tr - k * sk) / np.maximum(1.0, np.abs(sk))) <= 1e-10


@pytest.mark.parametrize("n", [2, 3, 4])
def test_derivative_positive_definite(n):
    for k in range(1, n + 1):
        a, _ = random_admissible_matrices(n, k, 1000, seed=10 * n + k)
        for l in range(k):
            d = operator_derivative(a, HessianPair(k, l, n))
            assert np.min(np.linalg.eigvalsh(d)) > 0


def test_admissibility_examples():
    cm = admissibility(np.eye(4), 3)
    assert cm.member and cm.margin == pytest.approx(1.0)
    assert admissibility(np.diag([-0.5, 2, 2]), 2).member
    assert not admissibility(np.diag([-1.0, 0.5]), 2).member


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_conjugation_does_not_change_derivative_contract(n, seed):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(0.1, 2.0, n))[::-1]
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    a = q @ np.diag(lam) @ q.T
    p = HessianPair(n, n - 1, n)
    d = operator_derivative(a, p)
    g = quotient_gradient_unchecked(lam, n, n - 1)
    np.testing.assert_allclose(q.T @ d @ q, np.diag(g), atol=1e-10 * np.max(g))
