#!/usr/bin/env python3
"""
Tests for the quantum-mechanical line intensities and amplitudes.
"""

import logging
import math
import os
import sys

import numpy as np
import pytest
from scipy import special

# Add the src directory to the Python path
src_path = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_path)

from analysis import charfn_moment, initial_slope, moments
from models import HalfIndex, ModelKind, ModelParams, PhysicalContext
from qm_model import (
    exact_amplitudes, expanded_amplitudes, qm0_asymptotic, qm0_intensity, qm_charfn,
    qm_intensity, qm_intensity_curve, qm_line_intensities, qm_smoothed_intensity,
)
from validators import DomainError

FOURIER_POINTS = 4096


def _fourier_intensities(params, max_k):
    """|c_k|^2 of the zeta-harmonics of the expanded amplitudes."""
    zeta = 2 * math.pi * np.arange(FOURIER_POINTS) / FOURIER_POINTS
    amplitudes = expanded_amplitudes(zeta, params)
    upper = np.fft.fft(amplitudes.upper) / FOURIER_POINTS
    lower = np.fft.fft(amplitudes.lower) / FOURIER_POINTS
    return {
        k: abs((lower if k % 2 == 0 else upper)[k % FOURIER_POINTS]) ** 2
        for k in range(-max_k, max_k + 1)
    }


def test_exact_amplitudes_are_unitary():
    print("Testing exact_amplitudes...")
    ctx = PhysicalContext.sodium()
    zeta = np.linspace(-math.pi / 2, math.pi / 2, 181)
    for t0 in (0.0, 1e-9, 3e-8, 1e-7):
        pair = exact_amplitudes(zeta, ctx.with_t0(t0))
        np.testing.assert_allclose(pair.norm(), 1.0, atol=1e-12)

    still = exact_amplitudes(0.3, PhysicalContext.sodium(delta=0.0))
    assert still.upper == 0
    assert still.lower == 1
    print("✓ exact_amplitudes tests passed")


def test_expanded_amplitudes_converge_at_order_gamma_squared():
    """Halving gamma shrinks the worst deviation from the closed form about fourfold."""
    print("Testing expanded_amplitudes...")
    zeta = np.linspace(-math.pi / 2, math.pi / 2, 181)
    taus = np.linspace(0.0, 6.0, 601)

    def worst(gamma):
        base = PhysicalContext.from_params(ModelParams(1.0, gamma))
        deviation = 0.0
        for tau in taus:
            ctx = base.with_t0(2 * tau / (gamma ** 2 * base.delta))
            exact = exact_amplitudes(zeta, ctx)
            approx = expanded_amplitudes(zeta, ModelParams(tau, gamma))
            deviation = max(
                deviation,
                np.max(np.abs(exact.upper - approx.upper)),
                np.max(np.abs(exact.lower - approx.lower)),
            )
        return deviation

    ratio = worst(0.2) / worst(0.1)
    assert 3.5 <= ratio <= 4.5

    with pytest.raises(DomainError):
        expanded_amplitudes(0.0, ModelParams(1.0, 0.0))
    print("✓ expanded_amplitudes tests passed")


def test_qm0_intensity():
    print("Testing qm0_intensity...")
    assert qm0_intensity(0, 0.0) == 1.0
    assert qm0_intensity(1, 0.0) == 0.0
    for n in (-3, 0, 2, 7):
        assert qm0_intensity(n, 3.0) == pytest.approx(special.jv(abs(n), 3.0) ** 2, abs=1e-13)
    assert qm0_intensity(0, 2.404825557695773) < 1e-12

    taus = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(qm0_intensity(1, taus), special.jv(1, taus) ** 2, atol=1e-13)

    spectrum = qm_line_intensities(ModelParams(10.0, 0.0), max_n=60)
    assert spectrum.model is ModelKind.QM0
    assert abs(spectrum.total() - 1) < 1e-10
    assert all(key.is_integer for key in spectrum.keys())

    with pytest.raises(DomainError):
        qm0_intensity(0, -1.0)
    print("✓ qm0_intensity tests passed")


def test_qm_intensity_matches_fourier_decomposition():
    print("Testing qm_intensity...")
    gamma = 0.2
    params = ModelParams(3.0, gamma)
    reference = _fourier_intensities(params, 12)
    for k, expected in reference.items():
        assert abs(qm_intensity(k, params) - expected) < 2 * gamma ** 4

    spectrum = qm_line_intensities(params)
    assert spectrum.model is ModelKind.QM
    assert abs(spectrum.total() - 1) < 5e-4
    for key in spectrum.keys():
        assert spectrum.intensity(key) == pytest.approx(spectrum.intensity(-key), abs=1e-12)
    print("✓ qm_intensity tests passed")


def test_qm_intensity_reduces_to_bessel_at_gamma_zero():
    params = ModelParams(2.0, 0.0)
    assert qm_intensity(HalfIndex(4), params) == pytest.approx(special.jv(2, 2.0) ** 2, abs=1e-13)
    assert qm_intensity(3, params) == 0.0
    np.testing.assert_allclose(
        qm_intensity_curve(0, np.array([0.0, 1.0]), 0.0),
        special.jv(0, np.array([0.0, 1.0])) ** 2,
        atol=1e-13,
    )


def test_qm_smoothed_intensity():
    print("Testing qm_smoothed_intensity...")
    params = ModelParams(3.0, 0.2)
    assert qm_smoothed_intensity(0, params) == pytest.approx(special.jv(0, 3.0) ** 2 * 0.96, abs=1e-13)
    expected_odd = 0.02 * (special.jv(0, 3.0) ** 2 + special.jv(1, 3.0) ** 2)
    assert qm_smoothed_intensity(1, params) == pytest.approx(expected_odd, abs=1e-13)
    assert qm_smoothed_intensity(-1, params) == pytest.approx(expected_odd, abs=1e-13)

    spectrum = qm_line_intensities(params, smoothed=True)
    assert spectrum.model is ModelKind.QM_SMOOTHED
    assert abs(spectrum.total() - 1) < 1e-10
    print("✓ qm_smoothed_intensity tests passed")


def test_qm_charfn():
    print("Testing qm_charfn...")
    assert qm_charfn(0.0, ModelParams(3.0, 0.2)) == pytest.approx(1.0, abs=1e-14)
    variance = charfn_moment(lambda theta: qm_charfn(theta, ModelParams(3.0, 0.0)), 2)
    assert variance == pytest.approx(4.5, abs=1e-6)
    assert charfn_moment(lambda theta: qm_charfn(theta, ModelParams(3.0, 0.2)), 1) == pytest.approx(0.0, abs=1e-9)
    print("✓ qm_charfn tests passed")


def test_zeno_slope():
    slope = initial_slope(lambda t: qm0_intensity(0, t))
    assert abs(slope) < 1e-6
    coupled_slope = initial_slope(lambda t: qm_intensity(0, ModelParams(t, 0.2)))
    assert abs(coupled_slope) < 1e-3


def test_qm0_asymptotic():
    print("Testing qm0_asymptotic...")
    expected = 2 / (50 * math.pi) * math.cos(50 - math.pi / 4) ** 2
    assert qm0_asymptotic(0, 50.0) == pytest.approx(expected, rel=1e-12)
    assert qm0_asymptotic(0, 50.0) == pytest.approx(special.jv(0, 50.0) ** 2, rel=0.05)
    assert qm0_asymptotic(10, 200.0) == pytest.approx(special.jv(10, 200.0) ** 2, abs=1e-4)
    assert qm0_asymptotic(60, 50.0) == 0.0
    assert math.isfinite(qm0_asymptotic(50, 50.0))

    with pytest.raises(DomainError):
        qm0_asymptotic(0, 0.0)
    print("✓ qm0_asymptotic tests passed")


@pytest.mark.parametrize("tau", [1.0, 3.0, 10.0])
def test_bessel_variance_law(tau):
    spectrum = qm_line_intensities(ModelParams(tau, 0.0))
    assert moments(spectrum, 2) == pytest.approx(tau ** 2 / 2, abs=1e-6)
    assert moments(spectrum, 1) == pytest.approx(0.0, abs=1e-12)


def test_bessel_lines_change_in_single_steps():
    """<n^2> - 2 rho_1 vanishes like tau^4 at small tau."""
    print("Testing single-step behaviour of the Bessel spectrum...")

    def excess(tau):
        second = math.fsum(n ** 2 * float(qm0_intensity(n, tau)) for n in range(-30, 31))
        return second - 2 * float(qm0_intensity(1, tau))

    taus = [0.2, 0.1, 0.05]
    for tau in taus:
        assert excess(tau) / tau ** 4 == pytest.approx(1 / 8, abs=0.01)
    for tau in taus[:-1]:
        assert excess(tau) / excess(tau / 2) == pytest.approx(16.0, abs=0.5)
    print("✓ single-step tests passed")


def test_expansion_regime_warning(caplog):
    with caplog.at_level(logging.WARNING):
        qm_intensity(0, ModelParams(1.0, 0.2))
    assert not caplog.records
    with caplog.at_level(logging.WARNING):
        value = qm_intensity(0, ModelParams(1.0, 0.3))
    assert "expansion regime" in caplog.text
    assert value >= 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
