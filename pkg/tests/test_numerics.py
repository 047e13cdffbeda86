#!/usr/bin/env python3
"""
Tests for the special functions, quadrature and Gaussian smoothing.

scipy.special is only used here, as an independent oracle.
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy import special

# Add the src directory to the Python path
src_path = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_path)

from numerics import (
    QuadratureRule, bessel_i_scaled, bessel_j, bessel_j_signed, bessel_j_table,
    gaussian_smooth, gaussian_smooth_inverse_sqrt, gauss_legendre_rule, log_power, quad,
)
from validators import ConvergenceError, DomainError


def test_bessel_j_matches_reference():
    """J_n agrees with scipy on a grid of orders and arguments."""
    print("Testing bessel_j...")
    xs = np.array([0.0, 1e-3, 0.5, 2.404825557695773, 3.0, 10.0, 50.0, 200.0])
    for n in (0, 1, 2, 5, 17, 40, 100):
        expected = special.jv(n, xs)
        np.testing.assert_allclose(bessel_j(n, xs), expected, rtol=0, atol=1e-12)

    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(3, 0.0) == 0.0
    assert abs(bessel_j(0, 2.404826)) < 1e-6
    assert isinstance(bessel_j(2, 3.0), float)
    print("✓ bessel_j tests passed")


def test_bessel_j_table_and_signed_orders():
    print("Testing bessel_j_table...")
    x = np.linspace(0.1, 30.0, 50)
    table = bessel_j_table(60, x)
    assert table.shape == (61, 50)
    for n in range(1, 60):
        residual = table[n - 1] + table[n + 1] - (2 * n / x) * table[n]
        assert np.max(np.abs(residual)) < 1e-10

    for tau in (0.5, 3.0, 10.0, 50.0):
        rows = bessel_j_table(int(tau + 40), tau)
        total = rows[0] ** 2 + 2 * np.sum(rows[1:] ** 2)
        assert abs(total - 1) < 1e-10

    assert bessel_j_signed(-3, 2.0) == pytest.approx(-special.jv(3, 2.0), abs=1e-13)
    assert bessel_j_signed(-4, 2.0) == pytest.approx(special.jv(4, 2.0), abs=1e-13)
    print("✓ bessel_j_table tests passed")


def test_bessel_j_rejects_bad_input():
    with pytest.raises(DomainError):
        bessel_j(-1, 1.0)
    with pytest.raises(DomainError):
        bessel_j(1.5, 1.0)
    with pytest.raises(DomainError):
        bessel_j(0, float("nan"))


def test_bessel_i_scaled():
    """e^{-x} I_n(x) on both the series and the large-x branch."""
    print("Testing bessel_i_scaled...")
    for n in range(6):
        for x in (0.1, 1.0, 3.0, 10.0, 59.0, 100.0, 400.0):
            expected = special.ive(n, x)
            assert bessel_i_scaled(n, x) == pytest.approx(expected, rel=1e-10)
            assert 0 < bessel_i_scaled(n, x) <= 1

    assert bessel_i_scaled(0, 0.0) == 1.0
    assert bessel_i_scaled(2, 0.0) == 0.0
    assert bessel_i_scaled(5, 1.0) <= bessel_i_scaled(4, 1.0)
    with pytest.raises(DomainError):
        bessel_i_scaled(0, -1.0)
    print("✓ bessel_i_scaled tests passed")


def test_log_power_zero_convention():
    assert log_power(0, 0.0) == 0.0
    assert log_power(2, 0.0) == -np.inf
    assert log_power(3, 2.0) == pytest.approx(3 * math.log(2))


def test_quadrature_rule():
    print("Testing QuadratureRule...")
    rule = QuadratureRule.gauss_legendre(20)
    assert math.isclose(sum(rule.weights), 2.0, abs_tol=1e-12)
    nodes = np.array(rule.nodes)
    assert np.all(np.diff(nodes) > 0)
    np.testing.assert_allclose(nodes, -nodes[::-1], atol=1e-12)

    x, w = rule.mapped(-1.0, 1.0)
    # degree 2 * order - 1 is exact
    assert np.dot(w, x ** 38) == pytest.approx(2 / 39, abs=1e-12)
    for degree in range(0, 39):
        legendre = special.eval_legendre(degree, x)
        expected = 2.0 if degree == 0 else 0.0
        assert abs(np.dot(w, legendre) - expected) < 1e-12

    x, w = rule.composite(0.0, 2.0, 4)
    assert x.size == 80
    assert np.sum(w) == pytest.approx(2.0, abs=1e-12)

    with pytest.raises(DomainError):
        QuadratureRule(order=2, nodes=(-0.5, 0.5), weights=(0.5, 0.5))
    assert gauss_legendre_rule(20) is gauss_legendre_rule(20)
    print("✓ QuadratureRule tests passed")


def test_quad():
    print("Testing quad...")
    assert quad(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)
    assert quad(np.sqrt, 0.0, 1.0) == pytest.approx(2 / 3, abs=1e-10)
    assert quad(np.exp, 1.0, 0.0) == pytest.approx(-(math.e - 1), abs=1e-12)
    assert quad(np.cos, 2.0, 2.0) == 0.0
    # scalar-only integrands are evaluated point by point
    assert quad(lambda t: math.cos(t), 0.0, 1.0) == pytest.approx(math.sin(1.0), abs=1e-12)

    with pytest.raises(ConvergenceError):
        quad(lambda t: np.sin(200 * t ** 2), 0.0, 10.0, max_intervals=2)
    print("✓ quad tests passed")


def test_gaussian_smooth():
    print("Testing gaussian_smooth...")
    for tau in (0.5, 3.0, 50.0):
        assert gaussian_smooth(lambda t: np.full_like(t, 0.3), tau) == pytest.approx(0.3, abs=1e-10)
    assert gaussian_smooth(lambda t: t, 50.0) == pytest.approx(50.0, abs=1e-8)

    with pytest.raises(DomainError):
        gaussian_smooth(lambda t: t, 0.0)
    with pytest.raises(DomainError):
        gaussian_smooth(lambda t: t, 1.0, sigma_rel=0.0)
    print("✓ gaussian_smooth tests passed")


def test_gaussian_smooth_inverse_sqrt():
    """The cosh substitution matches a direct integral away from the edge."""
    tau, edge, sigma_rel = 20.0, 10.0, 0.025
    sigma = sigma_rel * tau
    lo, hi = tau - 5 * sigma, tau + 5 * sigma

    def direct(t):
        return np.exp(-0.5 * ((t - tau) / sigma) ** 2) / np.sqrt(t ** 2 - edge ** 2)

    mass = quad(lambda t: np.exp(-0.5 * ((t - tau) / sigma) ** 2), lo, hi)
    expected = quad(direct, lo, hi) / mass
    value = gaussian_smooth_inverse_sqrt(lambda t: np.ones_like(t), edge, tau, sigma_rel)
    assert value == pytest.approx(expected, rel=1e-9)

    # the whole window lies below the edge
    assert gaussian_smooth_inverse_sqrt(lambda t: np.ones_like(t), 30.0, tau, sigma_rel) == 0.0
    # edge inside the window: still finite
    assert math.isfinite(gaussian_smooth_inverse_sqrt(lambda t: np.ones_like(t), tau, tau, sigma_rel))
    with pytest.raises(DomainError):
        gaussian_smooth_inverse_sqrt(lambda t: np.ones_like(t), 0.0, 1.0, sigma_rel=0.2)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
