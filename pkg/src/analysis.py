"""
Cross-model analysis for the Kapitza-Dirac simulator.

This module provides velocity-profile smoothing, the classical deflection
density, characteristic-function inversion, moments, the monotonicity
discriminator, line visibility, unit conversion and spectrum comparison.
"""

import logging
import math
from typing import Callable, Dict, Iterable, Optional, Union

import numpy as np

try:
    from .models import (
        ComparisonReport, HalfIndex, Metric, ModelKind, MonotonicityReport,
        PhysicalContext, Spectrum, VelocityProfile, as_half_index,
    )
    from .numerics import gaussian_smooth, gaussian_smooth_inverse_sqrt, quad
    from .validators import (
        DomainError, IncompatibleSpectraError, NonPhysicalSpectrumError,
        ValidationError, validate_tau, validate_tau_grid,
    )
except ImportError:
    from models import (
        ComparisonReport, HalfIndex, Metric, ModelKind, MonotonicityReport,
        PhysicalContext, Spectrum, VelocityProfile, as_half_index,
    )
    from numerics import gaussian_smooth, gaussian_smooth_inverse_sqrt, quad
    from validators import (
        DomainError, IncompatibleSpectraError, NonPhysicalSpectrumError,
        ValidationError, validate_tau, validate_tau_grid,
    )

logger = logging.getLogger(__name__)

NEGATIVE_TOL = 1e-8
INVERSION_CUTOFF = 1e-15
MONOTONICITY_TOL = 1e-10
MIN_EXPECTED_COUNTS = 20
STENCIL_STEP = 1e-3
DIRECT_HALF_WIDTH = 8.0


def smooth_spectrum(
    intensity_fn: Callable[[HalfIndex, float], float],
    n: Union[int, HalfIndex],
    tau: float,
    profile: Optional[VelocityProfile] = None,
) -> float:
    """
    Velocity-averaged intensity of one line.

    Args:
        intensity_fn: Called as intensity_fn(key, tau_prime); tau_prime may be an array
        n: Line label
        tau: Mean transit time
        profile: Transit-time spread (default sigma = 0.025 tau)

    Returns:
        Gaussian average of the line intensity over tau_prime
    """
    profile = profile or VelocityProfile()
    key = as_half_index(n)
    return gaussian_smooth(lambda t: intensity_fn(key, t), tau, profile.sigma_rel)


def smoothed_spectrum(
    intensity_fn: Callable[[HalfIndex, float], float],
    keys: Iterable[Union[int, HalfIndex]],
    tau: float,
    model: ModelKind,
    profile: Optional[VelocityProfile] = None,
) -> Spectrum:
    """Apply smooth_spectrum to every key and collect a Spectrum."""
    profile = profile or VelocityProfile()
    intensities = {}
    for key in keys:
        key = as_half_index(key)
        intensities[key.k] = max(smooth_spectrum(intensity_fn, key, tau, profile), 0.0)
    return Spectrum.from_intensities(intensities, tau, model, meta={"sigma_rel": profile.sigma_rel})


def classical_density(p, tau: float):
    """
    Arcsine density 1 / (pi sqrt(tau^2 - p^2)) of the deflection p = tau sin 2 zeta.

    Raises:
        DomainError: If tau <= 0
    """
    tau = validate_tau(tau, strictly_positive=True)
    p = np.asarray(p, dtype=float)
    inside = np.abs(p) < tau
    values = np.where(inside, 1 / (math.pi * np.sqrt(np.where(inside, tau ** 2 - p ** 2, 1.0))), 0.0)
    return values.item() if values.ndim == 0 else values


def smoothed_classical(n: Union[int, HalfIndex], tau: float, profile: Optional[VelocityProfile] = None) -> float:
    """Velocity average of the classical density at line n."""
    profile = profile or VelocityProfile()
    key = as_half_index(n)
    return gaussian_smooth_inverse_sqrt(
        lambda t: np.full_like(np.asarray(t, dtype=float), 1 / math.pi),
        key.n,
        tau,
        profile.sigma_rel,
    )


def smoothed_asymptotic_direct(n: Union[int, HalfIndex], tau: float, profile: Optional[VelocityProfile] = None) -> float:
    """
    1/(pi sigma sqrt(2 pi)) * integral over tau' > |n| of
    exp(-(tau' - tau)^2 / 2 sigma^2) / sqrt(tau'^2 - n^2), with an untruncated kernel.
    """
    profile = profile or VelocityProfile()
    tau = validate_tau(tau, strictly_positive=True)
    sigma = profile.sigma(tau)
    edge = abs(as_half_index(n).n)
    lo = max(edge, tau - DIRECT_HALF_WIDTH * sigma)
    hi = tau + DIRECT_HALF_WIDTH * sigma
    prefactor = 1 / (math.pi * sigma * math.sqrt(2 * math.pi))
    if hi <= edge:
        return 0.0

    def kernel(t):
        return np.exp(-0.5 * ((t - tau) / sigma) ** 2)

    if edge == 0:
        if lo <= 0:
            raise DomainError("the transit-time spread reaches tau' = 0.")
        return prefactor * quad(lambda t: kernel(t) / t, lo, hi)
    u_lo = math.acosh(lo / edge)
    u_hi = math.acosh(hi / edge)
    return prefactor * quad(lambda u: kernel(edge * np.cosh(u)), u_lo, u_hi)


def invert_charfn(
    samples,
    support: str = "integer",
    tau: float = 0.0,
    model: ModelKind = ModelKind.INVERTED,
    meta: Optional[Dict] = None,
    max_k: Optional[int] = None,
    cutoff: float = INVERSION_CUTOFF,
) -> Spectrum:
    """
    Recover line intensities from a sampled characteristic function.

    `samples` holds F(theta_j) on theta_j = P j / N, j = 0..N-1, with period
    P = 2 pi for integral lines and P = 4 pi when half-integral lines are
    present. Coefficients in [-1e-8, 0) are clamped to 0 and lines at or
    below `cutoff` are dropped.

    Raises:
        ValidationError: If F(0) differs from 1 or the support is unknown
        NonPhysicalSpectrumError: If a coefficient is below -1e-8
    """
    values = np.asarray(samples, dtype=complex)
    if values.ndim != 1 or values.size < 2:
        raise ValidationError("characteristic function samples must be a 1-d array.")
    if abs(values[0] - 1) > NEGATIVE_TOL:
        raise ValidationError(f"characteristic function is {values[0]:.3g} at theta = 0, expected 1.")
    if support not in ("integer", "half"):
        raise ValidationError(f"support must be 'integer' or 'half', got {support!r}.")

    points = values.size
    coefficients = (np.fft.fft(values) / points).real
    index = np.arange(points)
    labels = np.where(index < points // 2, index, index - points)
    keys = 2 * labels if support == "integer" else labels
    limit = max_k if max_k is not None else int(np.max(np.abs(keys[index < points // 2])))

    worst = coefficients.min()
    if worst < -NEGATIVE_TOL:
        bad = int(keys[np.argmin(coefficients)])
        raise NonPhysicalSpectrumError(f"inverted intensity {worst:.3g} at k={bad} is negative.")

    intensities = {}
    for k, value in zip(keys, coefficients):
        if abs(k) <= limit and value > cutoff:
            intensities[int(k)] = float(value)
    logger.debug(f"inverted {points} samples into {len(intensities)} lines")
    return Spectrum.from_intensities(intensities, tau, model, meta=meta)


def spectrum_charfn(spec: Spectrum, theta):
    """Characteristic function sum_k rho_k e^{i k theta / 2} of a spectrum."""
    theta = np.asarray(theta, dtype=float)
    ks = np.array([key.k for key in spec.keys()], dtype=float)
    weights = np.array([line.intensity for _, line in spec.lines()])
    values = np.exp(1j * np.multiply.outer(theta, ks) / 2) @ weights
    return values.item() if np.ndim(values) == 0 else values


def charfn_moment(charfn: Callable, order: int, h: float = STENCIL_STEP) -> float:
    """
    First or second moment from a five-point central difference at theta = 0.

    F'(0) = i E[n] and F''(0) = -E[n^2].
    """
    plus2, plus1, minus1, minus2 = (complex(charfn(step)) for step in (2 * h, h, -h, -2 * h))
    if order == 1:
        derivative = (-plus2 + 8 * plus1 - 8 * minus1 + minus2) / (12 * h)
        return (derivative / 1j).real
    if order == 2:
        centre = complex(charfn(0.0))
        derivative = (-plus2 + 16 * plus1 - 30 * centre + 16 * minus1 - minus2) / (12 * h ** 2)
        return -derivative.real
    raise ValidationError(f"moment order must be 1 or 2, got {order}.")


def moments(spec: Spectrum, order: int) -> float:
    """Sum of (k/2)^order * rho over the spectrum."""
    if order not in (1, 2):
        raise ValidationError(f"moment order must be 1 or 2, got {order}.")
    return math.fsum(key.n ** order * line.intensity for key, line in spec.lines())


def monotonicity_check(
    intensity_fn: Callable[[float], float],
    n: int,
    tau_grid: Iterable[float],
    tolerance: float = MONOTONICITY_TOL,
) -> MonotonicityReport:
    """
    Look for rises of tau^-n rho_n(tau) along a grid.

    A Markov model must keep this quantity decreasing for every n >= 0, so
    any ascent above `tolerance` rules it out.

    Raises:
        ValidationError: If the grid is not increasing, starts at tau <= 0
            or has a step above 0.01
    """
    grid = [float(t) for t in tau_grid]
    validate_tau_grid(grid)
    n = abs(int(n))
    scaled = [float(intensity_fn(t)) / t ** n for t in grid]

    ascents = []
    for (left, right), (low, high) in zip(zip(grid, grid[1:]), zip(scaled, scaled[1:])):
        if high - low > tolerance:
            ascents.append((left, right, high - low))

    report = MonotonicityReport(n=n, ascents=ascents, tolerance=tolerance, points=len(grid))
    logger.info(f"monotonicity n={n}: {len(ascents)} ascents over {len(grid)} points")
    return report


def initial_slope(fn: Callable[[float], float], h: float = 1e-6) -> float:
    """One-sided slope (fn(h) - fn(0)) / h at tau -> 0."""
    return (float(fn(h)) - float(fn(0.0))) / h


def visible_lines(spec: Spectrum, threshold_rel: float = 0.01):
    """Lines at or above threshold_rel times the central line."""
    floor = threshold_rel * spec.intensity(0)
    return [key for key, line in spec.lines() if line.intensity >= floor]


def deflection_angle(k: Union[int, HalfIndex], ctx: Optional[PhysicalContext] = None) -> float:
    """
    Deflection (k/2) * 2h / (lambda M v) in radians.

    Raises:
        DomainError: If wavelength, mass or speed is not positive
    """
    ctx = ctx or PhysicalContext.sodium()
    for name in ("wavelength", "mass", "speed"):
        if getattr(ctx, name) <= 0:
            raise DomainError(f"{name} must be positive for a deflection angle.")
    return as_half_index(k).n * ctx.line_spacing_rad


def _chi2(reference: Spectrum, sampled: Spectrum, keys, min_expected: int):
    residuals = {}
    total = []
    for key in keys:
        expected = reference.intensity(key)
        stderr = sampled.stderr(key)
        if expected * sampled.samples < min_expected or not stderr:
            continue
        residual = (sampled.intensity(key) - expected) / stderr
        residuals[key] = residual
        total.append(residual ** 2)
    if not total:
        raise IncompatibleSpectraError(f"no line has {min_expected} expected counts for chi2.")
    return math.fsum(total) / len(total), residuals, len(total)


def compare_spectra(
    a: Spectrum,
    b: Spectrum,
    metric: Union[Metric, str] = Metric.SUP,
    tolerance: Optional[float] = None,
    max_line: Optional[float] = None,
    min_expected: int = MIN_EXPECTED_COUNTS,
) -> ComparisonReport:
    """
    Compare two spectra on the union of their lines.

    l1 and sup residuals are a - b, judged relative to the larger peak on the
    compared window. chi2 standardizes with the sampled spectrum's errors
    (b's when it has them, else a's), keeps lines with at least
    `min_expected` expected counts and reports chi2 per degree of freedom.

    Args:
        a: First spectrum
        b: Second spectrum
        metric: l1, sup or chi2
        tolerance: Pass threshold (relative to peak for l1 and sup)
        max_line: Restrict to lines with |n| <= max_line

    Raises:
        IncompatibleSpectraError: If the transit times differ or chi2 lacks errors
    """
    metric = Metric(metric)
    if not math.isclose(a.tau, b.tau, rel_tol=1e-12, abs_tol=1e-12):
        raise IncompatibleSpectraError(f"spectra belong to different tau ({a.tau} vs {b.tau}).")

    keys = sorted(set(a.keys()) | set(b.keys()))
    if max_line is not None:
        keys = [key for key in keys if abs(key.n) <= max_line]

    if metric is Metric.CHI2:
        if b.has_stderr and b.samples:
            reference, sampled = a, b
        elif a.has_stderr and a.samples:
            reference, sampled = b, a
        else:
            raise IncompatibleSpectraError("chi2 needs a sampled spectrum with standard errors.")
        value, residuals, dof = _chi2(reference, sampled, keys, min_expected)
        return ComparisonReport(metric, value, residuals, scale=1.0, tolerance=tolerance, dof=dof)

    residuals = {key: a.intensity(key) - b.intensity(key) for key in keys}
    magnitudes = [abs(value) for value in residuals.values()]
    if metric is Metric.L1:
        value = math.fsum(magnitudes)
    else:
        value = max(magnitudes, default=0.0)
    scale = max([a.intensity(key) for key in keys] + [b.intensity(key) for key in keys] + [0.0])
    return ComparisonReport(metric, value, residuals, scale=scale or 1.0, tolerance=tolerance)
