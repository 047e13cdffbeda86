"""
Event-driven Monte Carlo simulation of the Markov scattering models.

Trajectories are simulated exactly (exponential waiting times). They are
grouped into blocks; each block draws from its own Philox stream keyed by
(seed, block index), so results do not depend on how blocks are spread over
worker processes.
"""

import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Optional, Tuple

import numpy as np

try:
    from .models import HalfIndex, MCConfig, ModelKind, Parity, Spectrum, TrajectoryState, ZetaMode
    from .stochastic_model import concrete_rates
    from .validators import validate_gamma, validate_tau
except ImportError:
    from models import HalfIndex, MCConfig, ModelKind, Parity, Spectrum, TrajectoryState, ZetaMode
    from stochastic_model import concrete_rates
    from validators import validate_gamma, validate_tau

logger = logging.getLogger(__name__)


def block_generator(seed: int, block_index: int) -> np.random.Generator:
    """Counter-based stream for one block of trajectories."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block_index])))


def draw_phase(rng: np.random.Generator, size: Optional[int] = None):
    """Uniform phase on (-pi/2, pi/2]."""
    return math.pi / 2 - math.pi * rng.random(size)


def simulate_single_step(zeta: float, tau: float, rng: np.random.Generator, stats: Optional[Dict] = None) -> int:
    """
    One path of the single-step walk at fixed phase.

    Args:
        zeta: Standing-wave phase
        tau: Transit time
        rng: Random stream
        stats: Optional dict; its "jumps" entry is increased by the jumps taken

    Returns:
        Line number n reached at tau
    """
    tau = validate_tau(tau)
    rates = concrete_rates(zeta)
    total = rates.total
    n = 0
    jumps = 0
    if tau > 0 and total > 0:
        t = rng.exponential(1 / total)
        while t <= tau:
            n += 1 if rng.random() * total < rates.alpha else -1
            jumps += 1
            t += rng.exponential(1 / total)
    if stats is not None:
        stats["jumps"] = stats.get("jumps", 0) + jumps
    return n


def _coupled_rates(odd: bool, swing: float, gamma: float) -> Tuple[float, float]:
    if odd:
        return (1 + swing) / gamma ** 2, (1 - swing) / gamma ** 2
    return 1.0, 1.0


def simulate_coupled(
    zeta: float,
    tau: float,
    gamma: float,
    initial_parity: Parity,
    rng: np.random.Generator,
    stats: Optional[Dict] = None,
) -> HalfIndex:
    """
    One path of the coupled even/odd walk; every jump moves by half a line.

    From an even internal state the atom jumps up or down at rate 1 each, from
    an odd one at rates (1 +- sin 2 zeta) / gamma^2.

    Args:
        stats: Optional dict accumulating "jumps", "odd_time" and "odd_visits"

    Returns:
        Final line label
    """
    tau = validate_tau(tau)
    gamma = validate_gamma(gamma)
    swing = math.sin(2 * zeta)
    state = TrajectoryState(k=0, t=0.0, initial_parity=initial_parity)
    jumps = 0
    odd_time = 0.0
    odd_visits = 1 if initial_parity is Parity.ODD else 0

    while True:
        odd = state.parity is Parity.ODD
        up, down = _coupled_rates(odd, swing, gamma)
        total = up + down
        wait = rng.exponential(1 / total)
        if state.t + wait > tau:
            if odd:
                odd_time += tau - state.t
            break
        state.t += wait
        if odd:
            odd_time += wait
        state.k += 1 if rng.random() * total < up else -1
        jumps += 1
        if not odd:
            odd_visits += 1

    if stats is not None:
        stats["jumps"] = stats.get("jumps", 0) + jumps
        stats["odd_time"] = stats.get("odd_time", 0.0) + odd_time
        stats["odd_visits"] = stats.get("odd_visits", 0) + odd_visits
    return state.index


def simulate_block(config: MCConfig, block_index: int, size: int) -> Counter:
    """
    Simulate `size` trajectories in lockstep and histogram their final k.

    Every still-running path advances one event per pass; a path retires as
    soon as its next event falls beyond tau.
    """
    rng = block_generator(config.seed, block_index)
    if config.zeta_mode is ZetaMode.UNIFORM:
        zeta = draw_phase(rng, size)
    else:
        zeta = np.full(size, config.zeta)
    swing = np.sin(2 * zeta)

    k = np.zeros(size, dtype=np.int64)
    t = np.zeros(size)
    active = np.full(size, config.tau > 0)
    odd = np.full(size, config.initial_parity is Parity.ODD)
    step = 1 if config.coupled else 2
    g2 = config.gamma ** 2 if config.coupled else None

    passes = 0
    while active.any():
        idx = np.flatnonzero(active)
        if config.coupled:
            here = odd[idx]
            up = np.where(here, (1 + swing[idx]) / g2, 1.0)
            down = np.where(here, (1 - swing[idx]) / g2, 1.0)
        else:
            up = (1 + swing[idx]) / 2
            down = (1 - swing[idx]) / 2
        total = up + down

        t[idx] += rng.exponential(1.0, idx.size) / total
        done = t[idx] > config.tau
        active[idx[done]] = False

        moving = idx[~done]
        draws = rng.random(moving.size)
        k[moving] += np.where(draws * total[~done] < up[~done], step, -step)
        if config.coupled:
            odd[moving] = ~odd[moving]
        passes += 1

    logger.debug(f"block {block_index}: {size} trajectories in {passes} passes")
    values, counts = np.unique(k, return_counts=True)
    return Counter(dict(zip(values.tolist(), counts.tolist())))


def _run_block(task: Tuple[MCConfig, int, int]) -> Counter:
    return simulate_block(*task)


def estimate_spectrum(config: MCConfig, workers: int = 1) -> Spectrum:
    """
    Histogram of final lines over config.trajectories paths.

    Blocks run in a process pool when workers > 1; the merged histogram is
    the same for any worker count.

    Returns:
        MC spectrum with per-line standard errors sqrt(p (1 - p) / N)
    """
    total = config.trajectories
    blocks = math.ceil(total / config.block_size)
    tasks = [
        (config, index, min(config.block_size, total - index * config.block_size))
        for index in range(blocks)
    ]
    logger.info(f"Simulating {total} trajectories in {blocks} blocks on {workers} worker(s)")

    if workers > 1 and blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            histograms = list(pool.map(_run_block, tasks))
    else:
        histograms = [_run_block(task) for task in tasks]

    merged = Counter()
    for histogram in histograms:
        merged.update(histogram)

    intensities = {k: count / total for k, count in merged.items()}
    stderr = {k: math.sqrt(p * (1 - p) / total) for k, p in intensities.items()}
    return Spectrum.from_intensities(
        intensities,
        config.tau,
        ModelKind.MC,
        stderr=stderr,
        samples=total,
        meta=config.to_dict(),
    )
