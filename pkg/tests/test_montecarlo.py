#!/usr/bin/env python3
"""
Tests for the event-driven Monte Carlo sampler.

Trajectory counts are kept at a few hundred thousand; tolerances are a few
binomial standard errors.
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

from analysis import compare_spectra, moments
from models import HalfIndex, MCConfig, Metric, ModelKind, Parity, ZetaMode
from montecarlo import (
    block_generator, draw_phase, estimate_spectrum, simulate_block, simulate_coupled,
    simulate_single_step,
)
from stochastic_model import coupled_spectrum, stoch0_spectrum
from validators import ValidationError

TRAJECTORIES = 200_000


def test_block_streams_are_reproducible():
    first = block_generator(7, 3).random(5)
    again = block_generator(7, 3).random(5)
    other = block_generator(7, 4).random(5)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)

    phases = draw_phase(block_generator(1, 0), 10000)
    assert np.all(phases > -math.pi / 2)
    assert np.all(phases <= math.pi / 2)


def test_mc_config_validation():
    with pytest.raises(ValidationError):
        MCConfig(trajectories=0)
    with pytest.raises(ValidationError):
        MCConfig(trajectories=10, initial_parity=Parity.ODD)
    with pytest.raises(ValidationError):
        MCConfig(trajectories=10, seed=-1)
    assert MCConfig(trajectories=10, gamma=0.2).coupled
    assert not hasattr(MCConfig(trajectories=10), "start_k")
    assert MCConfig(trajectories=10).to_dict()["zeta_mode"] == "uniform"


def test_estimate_spectrum_is_deterministic():
    print("Testing estimate_spectrum determinism...")
    config = MCConfig(trajectories=5000, seed=42, tau=2.0, block_size=1000)
    first = estimate_spectrum(config)
    second = estimate_spectrum(config)
    assert first.entries == second.entries
    assert first.model is ModelKind.MC
    assert first.samples == 5000
    assert first.meta["seed"] == 42

    pooled = estimate_spectrum(config, workers=2)
    assert pooled.entries == first.entries

    reseeded = estimate_spectrum(MCConfig(trajectories=5000, seed=43, tau=2.0, block_size=1000))
    assert reseeded.entries != first.entries
    print("✓ estimate_spectrum determinism tests passed")


def test_zero_tau_stays_on_the_central_line():
    spectrum = estimate_spectrum(MCConfig(trajectories=100, tau=0.0))
    assert spectrum.intensity(0) == 1.0
    assert spectrum.stderr(0) == 0.0


def test_pure_birth_phase_gives_poisson_counts():
    config = MCConfig(trajectories=TRAJECTORIES, seed=5, tau=3.0, zeta_mode=ZetaMode.FIXED, zeta=math.pi / 4)
    spectrum = estimate_spectrum(config)
    assert all(key.k >= 0 for key in spectrum.keys())
    assert moments(spectrum, 1) == pytest.approx(3.0, abs=4 * math.sqrt(3.0 / TRAJECTORIES))


def test_fixed_phase_matches_occupation_probabilities():
    print("Testing fixed-phase Monte Carlo...")
    config = MCConfig(trajectories=TRAJECTORIES, seed=11, tau=3.0, zeta_mode=ZetaMode.FIXED, zeta=0.0)
    spectrum = estimate_spectrum(config)
    for n in range(-6, 7):
        expected = special.ive(abs(n), 3.0)
        stderr = math.sqrt(expected * (1 - expected) / TRAJECTORIES)
        assert abs(spectrum.intensity(2 * n) - expected) < 4.5 * stderr
    print("✓ fixed-phase Monte Carlo tests passed")


def test_uniform_phase_matches_stochastic_model():
    print("Testing uniform-phase Monte Carlo...")
    config = MCConfig(trajectories=TRAJECTORIES, seed=2024, tau=3.0)
    sampled = estimate_spectrum(config)
    reference = stoch0_spectrum(3.0)

    report = compare_spectra(reference, sampled, Metric.CHI2)
    assert 0.3 <= report.value <= 2.5
    within = [abs(value) <= 4 for value in report.residuals.values()]
    assert sum(within) >= 0.9 * len(within)

    variance = moments(sampled, 2) - moments(sampled, 1) ** 2
    assert variance == pytest.approx(7.5, abs=0.15)
    print("✓ uniform-phase Monte Carlo tests passed")


def test_single_step_jump_count():
    rng = block_generator(3, 0)
    stats = {}
    paths = 20000
    for _ in range(paths):
        simulate_single_step(float(draw_phase(rng)), 3.0, rng, stats)
    assert stats["jumps"] / paths == pytest.approx(3.0, abs=5 * math.sqrt(3.0 / paths))


def test_single_step_paths():
    print("Testing simulate_single_step...")
    rng = block_generator(21, 0)
    assert simulate_single_step(0.4, 0.0, rng) == 0

    paths = 40000
    births = [simulate_single_step(math.pi / 4, 3.0, rng) for _ in range(paths)]
    assert min(births) >= 0
    assert np.mean(births) == pytest.approx(3.0, abs=4 * math.sqrt(3.0 / paths))

    finals = np.array([simulate_single_step(0.0, 3.0, rng) for _ in range(paths)])
    for n in range(-5, 6):
        expected = special.ive(abs(n), 3.0)
        stderr = math.sqrt(expected * (1 - expected) / paths)
        assert abs(np.mean(finals == n) - expected) < 4.5 * stderr
    print("✓ simulate_single_step tests passed")


def test_quarter_period_shift_mirrors_the_histogram():
    zeta = -0.4
    direct = estimate_spectrum(MCConfig(trajectories=TRAJECTORIES, seed=31, tau=3.0, zeta_mode=ZetaMode.FIXED, zeta=zeta))
    shifted = estimate_spectrum(MCConfig(
        trajectories=TRAJECTORIES, seed=32, tau=3.0, zeta_mode=ZetaMode.FIXED, zeta=zeta + math.pi / 2,
    ))
    assert moments(direct, 1) == pytest.approx(-moments(shifted, 1), abs=4 * math.sqrt(2 * 3.0 / TRAJECTORIES))
    for n in range(-8, 5):
        p = 0.5 * (direct.intensity(2 * n) + shifted.intensity(-2 * n))
        stderr = math.sqrt(2 * p * (1 - p) / TRAJECTORIES)
        assert abs(direct.intensity(2 * n) - shifted.intensity(-2 * n)) <= 5 * stderr + 1e-12


def test_coupled_walk_matches_closed_form():
    print("Testing coupled Monte Carlo...")
    gamma = 0.2
    config = MCConfig(trajectories=TRAJECTORIES, seed=9, tau=3.0, gamma=gamma)
    sampled = estimate_spectrum(config)
    exact = coupled_spectrum(3.0, gamma)

    odd_sampled = sum(line.intensity for key, line in sampled.lines() if not key.is_integer)
    odd_exact = sum(line.intensity for key, line in exact.lines() if not key.is_integer)
    stderr = math.sqrt(odd_exact * (1 - odd_exact) / TRAJECTORIES)
    assert abs(odd_sampled - odd_exact) < 4 * stderr

    flipped = estimate_spectrum(MCConfig(trajectories=20000, seed=9, tau=3.0, gamma=gamma, initial_parity=Parity.ODD))
    odd_share = sum(line.intensity for key, line in flipped.lines() if not key.is_integer)
    assert odd_share >= 0.9
    print("✓ coupled Monte Carlo tests passed")


def test_coupled_dwell_time_in_odd_states():
    gamma = 0.2
    rng = block_generator(17, 0)
    stats = {}
    for _ in range(5000):
        final = simulate_coupled(float(draw_phase(rng)), 3.0, gamma, Parity.EVEN, rng, stats)
        assert isinstance(final, HalfIndex)
    mean_dwell = stats["odd_time"] / stats["odd_visits"]
    assert mean_dwell == pytest.approx(gamma ** 2 / 2, rel=0.05)


def test_simulate_block_counts_every_trajectory():
    config = MCConfig(trajectories=1000, seed=1, tau=1.5, gamma=0.2)
    histogram = simulate_block(config, 0, 1000)
    assert sum(histogram.values()) == 1000


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
