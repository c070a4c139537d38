from itertools import combinations
from math import comb, prod

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hessquot.errors import InvalidDegreeError, NotAdmissibleError
from hessquot.symmetric import (
    HessianPair,
    Spectrum,
    elementary_symmetric,
    gamma_k_membership,
    hessian_quotient,
    hessian_quotient_gradient,
    newton_maclaurin,
    sigma_gradient,
    sigma_minors,
)


def sigma_by_subsets(lam, m):
    return sum(prod(c) for c in combinations(lam, m))


def test_worked_values():
    assert elementary_symmetric([1, 2, 3], 2) == pytest.approx(11)
    assert elementary_symmetric([1, 1, 1, 1], 2) == pytest.approx(6)
    assert elementary_symmetric([1, 2, 3], 1, excluded=[1]) == pytest.approx(4)
    assert elementary_symmetric([7.0, -2.0], 0) == 1.0
    np.testing.assert_allclose(sigma_minors([1, 2, 3], 1), [5, 4, 3])
    np.testing.assert_allclose(sigma_minors([1, 1, 1], 0), [1, 1, 1])
    lam = np.array([2.0, -3.0, 5.0, 0.5])
    np.testing.assert_allclose(sigma_minors(lam, 3), [np.prod(np.delete(lam, i)) for i in range(4)])


def test_degree_and_excluded_errors():
    with pytest.raises(InvalidDegreeError):
        elementary_symmetric([1, 2], 3)
    with pytest.raises(InvalidDegreeError):
        elementary_symmetric([1, 2], -1)
    with pytest.raises(ValueError):
        elementary_symmetric([1, 2, 3], 1, excluded=[1, 1])
    with pytest.raises(ValueError):
        Spectrum([1.0, np.nan])
    with pytest.raises(ValueError):
        HessianPair(2, 2, 3)


def test_cone_membership_examples():
    assert gamma_k_membership([2, 2, -0.5], 2).member
    assert gamma_k_membership([1, 1, 1], 3).member
    cm = gamma_k_membership([1, -2, 1], 2)
    assert not cm.member and cm.margin <= 0.0
    assert gamma_k_membership(Spectrum([1.0, 1.0]), 2).margin == pytest.approx(1.0)


def test_quotient_examples():
    assert hessian_quotient([1, 1], HessianPair(2, 0, 2)) == pytest.approx(1)
    assert hessian_quotient([1, 2], HessianPair(2, 1, 2)) == pytest.approx(2 / 3)
    for n, k, l in [(3, 2, 1), (4, 3, 1), (5, 5, 2)]:
        a = 1.7
        expected = comb(n, k) / comb(n, l) * a ** (k - l)
        assert hessian_quotient([a] * n, HessianPair(k, l, n)) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(NotAdmissibleError) as exc:
        hessian_quotient([1, -2, 1], HessianPair(2, 0, 3))
    assert exc.value.margin <= 0


def test_gradient_examples():
    np.testing.assert_allclose(hessian_quotient_gradient([1, 2], HessianPair(2, 0, 2)), [2, 1])
    np.testing.assert_allclose(hessian_quotient_gradient([1, 1, 1], HessianPair(1, 0, 3)), [1, 1, 1])
    g = hessian_quotient_gradient([-0.5, 2, 2], HessianPair(2, 0, 3))
    assert g[0] == pytest.approx(4) and g.sum() == pytest.approx(7)


def test_newton_maclaurin_examples():
    lhs, rhs = newton_maclaurin([1, 2, 3], 3, 0, 2, 0)
    assert lhs == pytest.approx(6 ** (1 / 3)) and rhs == pytest.approx((11 / 3) ** 0.5)
    lhs, rhs = newton_maclaurin([2, 2, -0.5], 2, 1, 1, 0)
    assert lhs == pytest.approx((2 / 3) / (3.5 / 3)) and rhs == pytest.approx(3.5 / 3)
    lhs, rhs = newton_maclaurin([0.8] * 4, 4, 1, 2, 1)
    assert lhs == pytest.approx(0.8) and rhs == pytest.approx(0.8)
    with pytest.raises(ValueError):
        newton_maclaurin([1, 2, 3], 2, 1, 3, 0)


def test_recurrence_matches_subset_enumeration():
    rng = np.random.default_rng(11)
    for n in range(1, 13):
        for _ in range(5):
            lam = rng.uniform(0.2, 2.0, n) * rng.choice([-1.0, 1.0], n)
            for m in range(n + 1):
                exact = sigma_by_subsets(lam.tolist(), m)
                got = elementary_symmetric(lam, m)
                # cancellation can make exact tiny; compare against the absolute-value sum
                scale = sigma_by_subsets(np.abs(lam).tolist(), m)
                assert abs(got - exact) <= 1e-12 * scale


def test_batched_matches_single():
    rng = np.random.default_rng(3)
    lam = rng.normal(size=(7, 5))
    batch = elementary_symmetric(lam, 3)
    assert batch.shape == (7,)
    for i in range(7):
        assert batch[i] == elementary_symmetric(lam[i], 3)


vectors = st.integers(2, 7).flatmap(
    lambda n: arrays(np.float64, n, elements=st.floats(-3, 3, allow_nan=False, allow_subnormal=False))
)


@settings(max_examples=200, deadline=None)
@given(vectors, st.data())
def test_minor_identities(lam, data):
    n = lam.size
    k = data.draw(st.integers(1, n))
    sk = elementary_symmetric(lam, k)
    mk = sigma_minors(lam, k)
    mk1 = sigma_minors(lam, k - 1)
    scale = max(1.0, sigma_by_subsets(np.abs(lam).tolist(), k))
    assert np.all(np.abs(mk + lam * mk1 - sk) <= 1e-10 * scale)
    assert abs(np.sum(lam * mk1) - k * sk) <= 1e-10 * scale * n
    assert abs(np.sum(mk) - (n - k) * sk) <= 1e-10 * scale * n


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.data())
def test_quotient_gradient_positive_in_cone(n, data):
    k = data.draw(st.integers(1, n))
    l = data.draw(st.integers(0, k - 1))
    lam = np.array(data.draw(st.lists(st.floats(-1, 3), min_size=n, max_size=n)))
    # keep away from the cone boundary, where the gradient underflows to rounding
    if gamma_k_membership(lam, k).margin < 1e-3:
        lam = lam + (abs(lam.min()) + 0.5)
    g = hessian_quotient_gradient(lam, HessianPair(k, l, n))
    assert np.all(g > 0)


def test_sigma_gradient_finite_differences():
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(200):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n + 1))
        lam = rng.uniform(-1, 3, n)
        g = sigma_gradient(lam, m)
        fd = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fd[i] = (elementary_symmetric(lam + e, m) - elementary_symmetric(lam - e, m)) / (2 * h)
        assert np.max(np.abs(fd - g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))
