"""
Quantum-mechanical model of Kapitza-Dirac scattering.

Covers the closed-form two-level amplitudes, their order-gamma^2 expansion,
the even/odd line intensities that follow from its Fourier decomposition,
the gamma -> 0 Bessel spectrum, characteristic functions and the large-tau
asymptotics.
"""

import logging
import math
from typing import Optional, Union

import numpy as np

try:
    from .models import (
        AmplitudePair, HalfIndex, ModelKind, ModelParams, PhysicalContext,
        Spectrum, as_half_index, default_window,
    )
    from .numerics import EDGE_SHRINK, bessel_j, bessel_j_table
    from .validators import DomainError
except ImportError:
    from models import (
        AmplitudePair, HalfIndex, ModelKind, ModelParams, PhysicalContext,
        Spectrum, as_half_index, default_window,
    )
    from numerics import EDGE_SHRINK, bessel_j, bessel_j_table
    from validators import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(values):
    values = np.asarray(values)
    return values.item() if values.ndim == 0 else values


def _nonnegative_tau(tau: ArrayLike) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)) or np.any(tau < 0):
        raise DomainError("tau must be finite and >= 0.")
    return tau


def signed_bessel_rows(orders, x: ArrayLike) -> np.ndarray:
    """Rows J_m(x) for the given (possibly negative) integer orders."""
    orders = [int(m) for m in orders]
    table = bessel_j_table(max(abs(m) for m in orders), x)
    rows = []
    for m in orders:
        row = table[abs(m)]
        rows.append(-row if m < 0 and m % 2 else row)
    return np.stack(rows)


def exact_amplitudes(zeta: ArrayLike, ctx: PhysicalContext) -> AmplitudePair:
    """
    Closed-form amplitudes at time t0 for an atom entering in the lower state.

    The overall e^{+-i omega t0 / 2} phase is dropped. Where Omega vanishes
    (zero detuning at a node of the standing wave) the coupling is zero and
    the atom stays in the lower state.

    Args:
        zeta: Standing-wave phase(s)
        ctx: Physical parameters

    Returns:
        AmplitudePair with upper and lower amplitudes
    """
    zeta = np.asarray(zeta, dtype=float)
    coupling = ctx.rabi * np.cos(zeta)
    omega = np.sqrt(ctx.delta ** 2 / 4 + coupling ** 2)

    degenerate = omega == 0
    if np.any(degenerate):
        logger.debug("Omega = 0 at some phases, using the uncoupled limit")
    safe = np.where(degenerate, 1.0, omega)
    phase = omega * ctx.t0

    upper = np.where(degenerate, 0.0, -1j * (coupling / safe) * np.sin(phase))
    lower = np.where(degenerate, 1.0 + 0j, np.cos(phase) + 1j * (ctx.delta / (2 * safe)) * np.sin(phase))
    return AmplitudePair(_scalar_or_array(upper), _scalar_or_array(lower))


def expanded_amplitudes(zeta: ArrayLike, params: ModelParams) -> AmplitudePair:
    """
    Amplitudes to order gamma^2 in the dimensionless variables.

    Raises:
        DomainError: If gamma = 0 (the fast phase diverges)
    """
    if params.gamma == 0:
        raise DomainError("expanded amplitudes need gamma > 0.")
    zeta = np.asarray(zeta, dtype=float)
    gamma = params.gamma
    fast = gamma ** -2 + 1 + np.cos(2 * zeta)
    swing = np.sin(fast * params.tau)

    upper = -2j * gamma * np.cos(zeta) * swing
    lower = np.exp(1j * fast * params.tau) - 2j * gamma ** 2 * np.cos(zeta) ** 2 * swing
    return AmplitudePair(_scalar_or_array(upper), _scalar_or_array(lower))


def qm0_intensity(n: int, tau: ArrayLike) -> ArrayLike:
    """Intensity J_n(tau)^2 of line n in the gamma -> 0 limit."""
    values = bessel_j(abs(int(n)), _nonnegative_tau(tau)) ** 2
    return _scalar_or_array(values)


def qm_intensity_curve(k: int, tau: ArrayLike, gamma: float) -> np.ndarray:
    """qm_intensity for a doubled line index k over an array of transit times."""
    tau = _nonnegative_tau(tau)
    if gamma == 0:
        if k % 2:
            return np.zeros_like(tau)
        return bessel_j(abs(k // 2), tau) ** 2

    g2 = gamma ** 2
    base = (1 + g2) * tau / g2
    if k % 2 == 0:
        n = k // 2
        lower, centre, upper = signed_bessel_rows((n - 1, n, n + 1), tau)
        phase = base + n * math.pi / 2
        derivative = (lower - upper) / 2
        return centre ** 2 * (1 - 2 * g2 * np.sin(phase) ** 2) + g2 * centre * derivative * np.sin(2 * phase)

    n = (k - 1) // 2
    centre, upper = signed_bessel_rows((n, n + 1), tau)
    phase = base + n * math.pi / 2
    return g2 * (centre * np.sin(phase) + upper * np.cos(phase)) ** 2


def qm_intensity(k: Union[int, HalfIndex], params: ModelParams) -> float:
    """
    Order-gamma^2 intensity of line k.

    Even k = 2n is an integral line fed by the lower state; odd k = 2n + 1 is
    the half-integral line n + 1/2 fed by the upper state. The values
    oscillate in tau on the fast scale 1/gamma^2.
    """
    key = as_half_index(k)
    if not params.in_expansion_regime:
        logger.warning(f"order-gamma^2 intensities used at gamma={params.gamma}, beyond the expansion regime")
    return float(qm_intensity_curve(key.k, params.tau, params.gamma))


def qm_smoothed_intensity(k: Union[int, HalfIndex], params: ModelParams) -> float:
    """Line intensity with the fast sin^2 and cos^2 factors replaced by 1/2."""
    key = as_half_index(k)
    return float(qm_smoothed_intensity_curve(key.k, params.tau, params.gamma))


def qm_smoothed_intensity_curve(k: int, tau: ArrayLike, gamma: float) -> np.ndarray:
    """qm_smoothed_intensity for a doubled line index k over an array of transit times."""
    tau = _nonnegative_tau(tau)
    g2 = gamma ** 2
    if k % 2 == 0:
        return bessel_j(abs(k // 2), tau) ** 2 * (1 - g2)
    n = (k - 1) // 2
    centre, upper = signed_bessel_rows((n, n + 1), tau)
    return (g2 / 2) * (centre ** 2 + upper ** 2)


def qm_charfn(theta: ArrayLike, params: ModelParams) -> ArrayLike:
    """
    Characteristic function of the smoothed QM spectrum.

    F(theta) = J_0(2 tau sin(theta / 2)) [1 + gamma^2 (cos(theta / 2) - 1)],
    so the gamma = 0 case is the pure Bessel form.
    """
    theta = np.asarray(theta, dtype=float)
    values = bessel_j(0, 2 * params.tau * np.sin(theta / 2)) * (1 + params.gamma ** 2 * (np.cos(theta / 2) - 1))
    return _scalar_or_array(np.asarray(values, dtype=complex))


def qm0_asymptotic(n: int, tau: ArrayLike) -> ArrayLike:
    """
    Large-tau form of J_n(tau)^2.

    For |n| < tau this is (2/pi)(tau^2 - n^2)^(-1/2) cos^2(sqrt(tau^2 - n^2) - beta|n| - pi/4)
    with beta = arccos(|n| / tau); lines outside the classical range get 0.

    Raises:
        DomainError: If tau <= 0
    """
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
        raise DomainError("qm0_asymptotic needs tau > 0.")
    m = float(abs(int(n)))
    edge = np.where(m == tau, tau * (1 - EDGE_SHRINK), m)
    inside = edge < tau
    ratio = np.where(inside, edge / tau, 0.0)
    root = np.sqrt(np.where(inside, tau ** 2 - edge ** 2, 1.0))
    beta = np.arccos(ratio)
    values = np.where(inside, (2 / math.pi) / root * np.cos(root - beta * edge - math.pi / 4) ** 2, 0.0)
    return _scalar_or_array(values)


def qm_line_intensities(
    params: ModelParams,
    max_n: Optional[int] = None,
    smoothed: bool = False,
) -> Spectrum:
    """
    Full QM spectrum on |n| <= max_n.

    gamma = 0 yields the Bessel spectrum (integral lines only). `smoothed`
    selects the fast-phase-averaged intensities.
    """
    max_n = default_window(params.tau) if max_n is None else int(max_n)
    if params.gamma == 0:
        rows = bessel_j_table(max_n, params.tau) ** 2
        intensities = {2 * n: float(rows[abs(n)]) for n in range(-max_n, max_n + 1)}
        model = ModelKind.QM0
    else:
        line = qm_smoothed_intensity_curve if smoothed else qm_intensity_curve
        intensities = {k: float(line(k, params.tau, params.gamma)) for k in range(-2 * max_n - 1, 2 * max_n + 2)}
        model = ModelKind.QM_SMOOTHED if smoothed else ModelKind.QM

    # order-gamma^2 formulas can dip a hair below zero on fast-phase nodes
    clamped = {k: max(value, 0.0) for k, value in intensities.items()}
    return Spectrum.from_intensities(clamped, params.tau, model, meta={"gamma": params.gamma, "max_n": max_n})
