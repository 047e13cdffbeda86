#!/usr/bin/env python3
"""
Property-based checks for line labels and the closed-form spectra.
"""

import os
import sys

import pytest
from hypothesis import given, settings, strategies as st

# Add the src directory to the Python path
src_path = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_path)

from models import HalfIndex, ModelParams, RatePair
from numerics import bessel_j_table
from qm_model import qm_line_intensities
from stochastic_model import occupation_prob, stoch0_intensity

rates = st.one_of(st.just(0.0), st.floats(min_value=0.01, max_value=1.0))
taus = st.floats(min_value=0.0, max_value=6.0)


@given(st.integers(min_value=-10**6, max_value=10**6))
def test_label_round_trip(k):
    key = HalfIndex(k)
    assert HalfIndex.from_n(float(key.label())) == key
    assert (-key).n == -key.n


@settings(max_examples=50, deadline=None)
@given(rates, rates, taus)
def test_occupation_is_a_distribution(alpha, beta, tau):
    pair = RatePair(alpha, beta)
    values = [occupation_prob(n, tau, pair) for n in range(-80, 81)]
    assert min(values) >= 0
    assert sum(values) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(rates, rates, taus, st.integers(min_value=-20, max_value=20))
def test_occupation_mirror(alpha, beta, tau, n):
    assert occupation_prob(n, tau, RatePair(alpha, beta)) == occupation_prob(-n, tau, RatePair(beta, alpha))


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.5, max_value=50.0))
def test_bessel_recurrence(x):
    table = bessel_j_table(41, x)
    for n in range(1, 41):
        residual = table[n - 1] + table[n + 1] - (2 * n / x) * table[n]
        assert abs(residual) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=6.0), st.floats(min_value=0.05, max_value=0.25))
def test_expansion_lines_are_clamped(tau, gamma):
    spectrum = qm_line_intensities(ModelParams(tau, gamma), max_n=12)
    assert min(line.intensity for _, line in spectrum.lines()) >= 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=30.0))
def test_bessel_spectrum_is_normalized(tau):
    assert qm_line_intensities(ModelParams(tau)).total() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10), st.floats(min_value=0.0, max_value=20.0))
def test_stochastic_lines_are_probabilities(n, tau):
    value = stoch0_intensity(n, tau)
    assert 0.0 <= value <= 1.0 + 1e-12
    assert stoch0_intensity(-n, tau) == value


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
