import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma, roots_genlaguerre, roots_laguerre

from ci_linkperf.quadrature import MAX_ORDER, gauss_laguerre, gauss_legendre


def test_laguerre_order_one():
    rule = gauss_laguerre(1)
    assert rule.nodes == pytest.approx([1.0])
    assert rule.weights == pytest.approx([1.0])


def test_laguerre_order_two():
    rule = gauss_laguerre(2)
    np.testing.assert_allclose(rule.nodes, [2 - math.sqrt(2), 2 + math.sqrt(2)], rtol=1e-14)
    np.testing.assert_allclose(rule.weights, [(2 + math.sqrt(2)) / 4, (2 - math.sqrt(2)) / 4], rtol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64, 128, 256])
def test_laguerre_invariants(n):
    rule = gauss_laguerre(n)
    assert rule.kind == "laguerre" and rule.order == n
    assert np.all(rule.nodes > 0)
    assert np.all(np.diff(rule.nodes) > 0)
    assert abs(rule.weights.sum() - 1.0) <= 1e-12
    assert abs(rule.integrate(rule.nodes) - 1.0) <= 1e-10
    if n >= 2:
        assert abs(rule.integrate(rule.nodes ** 2) - 2.0) <= 1e-10


@pytest.mark.parametrize("n", [4, 20, 100])
def test_laguerre_matches_scipy(n):
    x, w = roots_laguerre(n)
    rule = gauss_laguerre(n)
    np.testing.assert_allclose(rule.nodes, x, rtol=1e-12)
    big = w > 1e-250
    np.testing.assert_allclose(rule.weights[big], w[big], rtol=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 1.7, 3.0])
def test_generalised_laguerre(alpha):
    n = 30
    x, w = roots_genlaguerre(n, alpha)
    rule = gauss_laguerre(n, alpha)
    np.testing.assert_allclose(rule.nodes, x, rtol=1e-12)
    np.testing.assert_allclose(rule.weights, w / gamma(alpha + 1), rtol=1e-9, atol=1e-300)
    for j in range(2 * n):
        exact = math.exp(math.lgamma(alpha + 1 + j) - math.lgamma(alpha + 1))
        assert rule.integrate(rule.nodes ** j) == pytest.approx(exact, rel=1e-10)


@given(n=st.integers(1, 40), coeffs=st.lists(st.floats(-1, 1), min_size=1, max_size=80))
def test_laguerre_polynomial_exactness(n, coeffs):
    coeffs = coeffs[: 2 * n]
    rule = gauss_laguerre(n)
    approx = sum(c * rule.integrate(rule.nodes ** j) for j, c in enumerate(coeffs))
    exact = sum(c * math.factorial(j) for j, c in enumerate(coeffs))
    scale = sum(abs(c) * math.factorial(j) for j, c in enumerate(coeffs)) + 1.0
    assert abs(approx - exact) <= 1e-10 * scale


@pytest.mark.parametrize("bad", [0, -1, MAX_ORDER + 1, 2.5])
def test_order_out_of_range(bad):
    with pytest.raises(ValueError):
        gauss_laguerre(bad)
    with pytest.raises(ValueError):
        gauss_legendre(bad)


def test_legendre_midpoint():
    rule = gauss_legendre(1, 0.0, 2.0)
    assert rule.nodes == pytest.approx([1.0])
    assert rule.weights == pytest.approx([2.0])


def test_legendre_two_points():
    rule = gauss_legendre(2)
    np.testing.assert_allclose(rule.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], rtol=1e-14)
    np.testing.assert_allclose(rule.weights, [1.0, 1.0], rtol=1e-14)


def test_legendre_sine():
    rule = gauss_legendre(8, 0.0, math.pi / 2)
    assert abs(rule.integrate(np.sin(rule.nodes)) - 1.0) <= 1e-10


@given(n=st.integers(1, 64), lo=st.floats(-5, 5), width=st.floats(0.1, 10),
       coeffs=st.lists(st.floats(-1, 1), min_size=1, max_size=128))
def test_legendre_exactness(n, lo, width, coeffs):
    hi = lo + width
    rule = gauss_legendre(n, lo, hi)
    assert np.all((rule.nodes > lo) & (rule.nodes < hi))
    assert abs(rule.weights.sum() - width) <= 1e-12 * max(1.0, width)
    coeffs = coeffs[: 2 * n]
    poly = np.polynomial.Polynomial(coeffs)
    exact = poly.integ()(hi) - poly.integ()(lo)
    scale = np.polynomial.Polynomial(np.abs(coeffs)).integ()(max(abs(lo), abs(hi))) * 2 + 1
    assert abs(rule.integrate(poly(rule.nodes)) - exact) <= 1e-10 * scale


@pytest.mark.parametrize("lo,hi", [(1.0, 1.0), (2.0, 1.0), (0.0, float("inf"))])
def test_legendre_bad_interval(lo, hi):
    with pytest.raises(ValueError):
        gauss_legendre(4, lo, hi)


def test_rules_are_deterministic_and_readonly():
    a, b = gauss_laguerre(64), gauss_laguerre(64)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.weights, b.weights)
    with pytest.raises(ValueError):
        a.nodes[0] = 0.0
