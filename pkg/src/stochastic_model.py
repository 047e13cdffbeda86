"""
Markov scattering model of Kapitza-Dirac scattering.

The atom performs a single-step random walk on the lines with phase-dependent
up and down rates; averaging over the hidden phase zeta gives the stochastic
spectrum. The coupled extension alternates between even (lower-state) and
odd (upper-state) half-integral lines.
"""

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

try:
    from .analysis import invert_charfn
    from .models import HalfIndex, ModelKind, Parity, RatePair, Spectrum, default_window
    from .numerics import EDGE_SHRINK, QuadratureRule, bessel_j, log_factorials, log_power, quad
    from .validators import DomainError, validate_gamma, validate_phase, validate_tau
except ImportError:
    from analysis import invert_charfn
    from models import HalfIndex, ModelKind, Parity, RatePair, Spectrum, default_window
    from numerics import EDGE_SHRINK, QuadratureRule, bessel_j, log_factorials, log_power, quad
    from validators import DomainError, validate_gamma, validate_phase, validate_tau

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

COUPLED_GAMMA_MAX = 0.3
INVERSION_POINTS = 8192
CONFLUENT_TOL = 1e-12
NORMALIZATION_EPS = 1e-4
_THETA_CHUNK = 1024


def concrete_rates(zeta: float) -> RatePair:
    """Rates alpha = (1 + sin 2 zeta) / 2, beta = (1 - sin 2 zeta) / 2."""
    zeta = validate_phase(zeta)
    swing = math.sin(2 * zeta)
    return RatePair((1 + swing) / 2, (1 - swing) / 2)


def _series_terms(tau: float, scale: float) -> int:
    return int(tau * scale + 10 * math.sqrt(tau * scale) + 30)


def _logsumexp(logs: np.ndarray, axis: int = 0) -> np.ndarray:
    top = np.max(logs, axis=axis)
    safe = np.where(np.isfinite(top), top, 0.0)
    total = np.sum(np.exp(logs - np.expand_dims(safe, axis)), axis=axis)
    with np.errstate(divide="ignore"):
        return safe + np.log(total)


def _occupation(n: int, tau: float, alpha: ArrayLike, beta: ArrayLike) -> np.ndarray:
    """P_n for n >= 0 through the bivariate series, vectorized over the rates."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    fastest = max(float(np.max(alpha)), float(np.max(beta)), 1.0)
    terms = _series_terms(tau, fastest) + n
    r = np.arange(terms).reshape((terms,) + (1,) * alpha.ndim)
    lf = log_factorials(terms + n)
    logs = (
        log_power(n + r, alpha * tau)
        + log_power(r, beta * tau)
        - lf[r]
        - lf[n + r]
    )
    return np.exp(_logsumexp(logs) - (alpha + beta) * tau)


def occupation_prob(n: int, tau: float, rates: RatePair) -> float:
    """
    Probability that the walk sits at n after time tau, for fixed rates.

    Uses e^{-(a+b)tau} sum_r (a tau)^{n+r} (b tau)^r / (r! (n+r)!), which
    stays finite when one rate vanishes; P_{-n}(a, b) = P_n(b, a).

    Args:
        n: Line number
        tau: Elapsed time
        rates: Up and down rates

    Returns:
        P_n in [0, 1]
    """
    tau = validate_tau(tau)
    n = int(n)
    if n < 0:
        n, rates = -n, rates.swapped()
    return float(_occupation(n, tau, rates.alpha, rates.beta))


def _gamma_series(n: int, tau: float, derivatives: int = 0) -> Tuple[float, ...]:
    """
    e^{-tau}/pi sum_r G(r+1/2) G(n+r+1/2) tau^{n+2r} / (r! (n+r)! (n+2r)!)
    and its first `derivatives` tau-derivatives, term by term.
    """
    n = abs(int(n))
    terms = _series_terms(tau, 1.0) + n
    r = np.arange(terms)
    lf = log_factorials(2 * (terms + n))
    half_log_pi = 0.5 * math.log(math.pi)

    def log_gamma_half(m):
        # log Gamma(m + 1/2) for integer m >= 0
        return half_log_pi + lf[2 * m] - m * math.log(4) - lf[m]

    power = n + 2 * r
    log_coeff = log_gamma_half(r) + log_gamma_half(n + r) - lf[r] - lf[n + r] - lf[power]

    sums = []
    falling = np.ones(terms)
    for order in range(derivatives + 1):
        live = power >= order
        exponent = np.where(live, power - order, 0)
        with np.errstate(divide="ignore"):
            logs = np.where(live & (falling > 0), log_coeff + np.log(np.where(falling > 0, falling, 1.0)) + log_power(exponent, tau), -np.inf)
        sums.append(float(np.exp(_logsumexp(logs))) if np.any(np.isfinite(logs)) else 0.0)
        falling = falling * (power - order)

    prefactor = math.exp(-tau) / math.pi
    if derivatives == 0:
        return (prefactor * sums[0],)
    # d/dtau of e^{-tau} S(tau) mixes the term-wise derivative sums
    value = prefactor * sums[0]
    first = prefactor * (sums[1] - sums[0])
    if derivatives == 1:
        return value, first
    second = prefactor * (sums[2] - 2 * sums[1] + sums[0])
    return value, first, second


def _quadrature_intensity(n: int, tau: float, rule: Optional[QuadratureRule]) -> float:
    n = abs(int(n))

    def integrand(xi):
        # alpha = cos^2 xi, beta = sin^2 xi sweeps sin 2 zeta over a full period
        return _occupation(n, tau, np.cos(xi) ** 2, np.sin(xi) ** 2)

    return (2 / math.pi) * quad(integrand, 0.0, math.pi / 2, rule)


def stoch0_intensity(n: int, tau: float, method: str = "series", rule: Optional[QuadratureRule] = None) -> float:
    """
    Phase-averaged intensity of line n in the single-step model.

    Args:
        n: Line number (the spectrum is symmetric in n)
        tau: Transit time
        method: "series" for the Gamma-series, "quadrature" for the zeta integral
        rule: Quadrature rule for method="quadrature"

    Raises:
        DomainError: If tau < 0 or the method is unknown
    """
    tau = validate_tau(tau)
    if method == "series":
        return _gamma_series(n, tau)[0]
    if method == "quadrature":
        return _quadrature_intensity(n, tau, rule)
    raise DomainError(f"unknown method {method!r}; use 'series' or 'quadrature'.")


def stoch0_intensity_derivatives(n: int, tau: float) -> Tuple[float, float, float]:
    """(rho, d rho / d tau, d^2 rho / d tau^2) of the stochastic line n."""
    tau = validate_tau(tau)
    return _gamma_series(n, tau, derivatives=2)


def stoch0_intensity_curve(n: int, taus: ArrayLike) -> np.ndarray:
    """stoch0_intensity over an array of transit times."""
    taus = np.asarray(taus, dtype=float)
    flat = [stoch0_intensity(n, float(t)) for t in taus.ravel()]
    return np.asarray(flat).reshape(taus.shape)


def stoch0_spectrum(tau: float, max_n: Optional[int] = None) -> Spectrum:
    """Stochastic spectrum on |n| <= max_n."""
    tau = validate_tau(tau)
    max_n = default_window(tau) if max_n is None else int(max_n)
    values = {n: stoch0_intensity(n, tau) for n in range(max_n + 1)}
    intensities = {2 * n: values[abs(n)] for n in range(-max_n, max_n + 1)}
    return Spectrum.from_intensities(intensities, tau, ModelKind.STOCH0, meta={"max_n": max_n})


def stoch_charfn_at_phase(theta: ArrayLike, tau: float, rates: RatePair) -> ArrayLike:
    """exp[tau alpha (e^{i theta} - 1) + tau beta (e^{-i theta} - 1)]."""
    theta = np.asarray(theta, dtype=float)
    values = np.exp(tau * rates.alpha * (np.exp(1j * theta) - 1) + tau * rates.beta * (np.exp(-1j * theta) - 1))
    return values.item() if values.ndim == 0 else values


def stoch0_charfn(theta: ArrayLike, tau: float) -> ArrayLike:
    """Phase-averaged characteristic function exp[-tau(1 - cos theta)] J_0(tau sin theta)."""
    tau = validate_tau(tau)
    theta = np.asarray(theta, dtype=float)
    values = np.exp(-tau * (1 - np.cos(theta))) * bessel_j(0, tau * np.sin(theta))
    values = np.asarray(values, dtype=complex)
    return values.item() if values.ndim == 0 else values


def stoch0_asymptotic(n: int, tau: ArrayLike) -> ArrayLike:
    """
    Steepest-descent form 1 / (pi sqrt(tau^2 - n^2)) for |n| < tau, 0 beyond.

    Raises:
        DomainError: If tau <= 0
    """
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
        raise DomainError("stoch0_asymptotic needs tau > 0.")
    m = float(abs(int(n)))
    edge = np.where(m == tau, tau * (1 - EDGE_SHRINK), m)
    inside = edge < tau
    values = np.where(inside, 1 / (math.pi * np.sqrt(np.where(inside, tau ** 2 - edge ** 2, 1.0))), 0.0)
    return values.item() if values.ndim == 0 else values


def _coupled_eigen(theta, gamma: float, swing):
    """Matrix entries and decay rates of the even/odd generating-function system."""
    g2 = gamma ** 2
    cos_half = np.cos(theta / 2)
    sin_half = np.sin(theta / 2)
    a = (2 / g2) * (cos_half + 1j * sin_half * swing)
    b = 2 * cos_half
    root = np.sqrt(1 + 2 * g2 * (np.cos(theta) + 1j * np.sin(theta) * swing) + g2 ** 2 + 0j)
    fast = (1 + g2 + root) / g2
    slow = (1 + g2 - root) / g2
    return a, b, fast, slow


def coupled_components(
    theta: ArrayLike,
    tau: float,
    gamma: float,
    zeta: ArrayLike,
    initial_parity: Parity = Parity.EVEN,
):
    """
    Generating functions (f1, f2) of the even and odd internal states.

    f1 and f2 solve f1' = -2 f1 + a f2, f2' = b f1 - (2/gamma^2) f2 with
    a = 2 gamma^-2 (cos(theta/2) + i sin(theta/2) sin 2 zeta) and
    b = 2 cos(theta/2). An even start has f1(0) = 1, f2(0) = 0; an odd start
    has f1(0) = 0, f2(0) = 1. Inputs broadcast against each other.
    """
    tau = validate_tau(tau)
    validate_gamma(gamma)
    theta = np.asarray(theta, dtype=float)
    swing = np.sin(2 * np.asarray(zeta, dtype=float))
    a, b, fast, slow = _coupled_eigen(theta, gamma, swing)
    odd_decay = 2 / gamma ** 2

    gap = fast - slow
    confluent = np.abs(gap) < CONFLUENT_TOL * np.abs(fast)
    safe_gap = np.where(confluent, 1.0, gap)
    e_fast = np.exp(-fast * tau)
    e_slow = np.exp(-slow * tau)
    spread = (e_slow - e_fast) / safe_gap

    if initial_parity is Parity.EVEN:
        f1 = ((fast - 2) * e_slow - (slow - 2) * e_fast) / safe_gap
        f2 = b * spread
    else:
        f1 = a * spread
        f2 = ((fast - odd_decay) * e_slow - (slow - odd_decay) * e_fast) / safe_gap

    if np.any(confluent):
        # repeated eigenvalue g: exp(M tau) f0 = e^{-g tau} (f0 + tau (M + g) f0)
        g = (fast + slow) / 2
        decay = np.exp(-g * tau)
        if initial_parity is Parity.EVEN:
            c1 = decay * (1 + tau * (g - 2))
            c2 = decay * tau * b
        else:
            c1 = decay * tau * a
            c2 = decay * (1 + tau * (g - odd_decay))
        f1 = np.where(confluent, c1, f1)
        f2 = np.where(confluent, c2, f2)

    return f1, f2


def coupled_charfn_at_phase(
    theta: ArrayLike,
    tau: float,
    gamma: float,
    zeta: ArrayLike,
    initial_parity: Parity = Parity.EVEN,
) -> ArrayLike:
    """Characteristic function f1 + f2 of the coupled model at fixed phase."""
    f1, f2 = coupled_components(theta, tau, gamma, zeta, initial_parity)
    values = np.asarray(f1 + f2)
    return values.item() if values.ndim == 0 else values


def coupled_charfn_approx(theta: ArrayLike, tau: float, gamma: float, zeta: ArrayLike) -> ArrayLike:
    """
    Order-gamma^2 form of the even-start characteristic function.

    e^{-g tau}[1 + (gamma^2/2)(2 cos(theta/2) - 2 + (2 tau + 1) g - tau g^2)]
    with g = 1 - cos theta - i sin theta sin 2 zeta.
    """
    theta = np.asarray(theta, dtype=float)
    g = 1 - np.cos(theta) - 1j * np.sin(theta) * np.sin(2 * np.asarray(zeta, dtype=float))
    bracket = 1 + (gamma ** 2 / 2) * (2 * np.cos(theta / 2) - 2 + (2 * tau + 1) * g - tau * g ** 2)
    values = np.exp(-g * tau) * bracket
    return values.item() if values.ndim == 0 else values


def phase_nodes(tau: float, rule: Optional[QuadratureRule] = None):
    """Composite Gauss-Legendre nodes on [-pi/4, pi/4] with weights averaging to 1."""
    rule = rule or QuadratureRule.gauss_legendre()
    panels = max(8, int(tau) + 4)
    nodes, weights = rule.composite(-math.pi / 4, math.pi / 4, panels)
    return nodes, weights * (2 / math.pi)


def coupled_charfn(theta: ArrayLike, tau: float, gamma: float, initial_parity: Parity = Parity.EVEN) -> np.ndarray:
    """Zeta-averaged coupled characteristic function on an array of theta."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    nodes, weights = phase_nodes(tau)
    out = np.empty(theta.shape, dtype=complex)
    for start in range(0, theta.size, _THETA_CHUNK):
        chunk = theta[start:start + _THETA_CHUNK]
        values = coupled_charfn_at_phase(chunk[:, None], tau, gamma, nodes[None, :], initial_parity)
        out[start:start + _THETA_CHUNK] = np.asarray(values) @ weights
    return out


def _check_coupled_gamma(gamma: float) -> float:
    gamma = validate_gamma(gamma)
    if gamma > COUPLED_GAMMA_MAX:
        raise DomainError(f"the coupled spectrum needs gamma in (0, {COUPLED_GAMMA_MAX}], got {gamma}.")
    return gamma


def coupled_spectrum(
    tau: float,
    gamma: float,
    initial_parity: Parity = Parity.EVEN,
    points: int = INVERSION_POINTS,
) -> Spectrum:
    """
    Exact coupled spectrum by numerical inversion of the averaged characteristic function.

    Raises:
        DomainError: If gamma is outside (0, 0.3] or tau < 0
        TruncationError: If the recovered lines miss more than 1e-4 of the mass
    """
    tau = validate_tau(tau)
    gamma = _check_coupled_gamma(gamma)
    theta = 4 * math.pi * np.arange(points) / points
    samples = coupled_charfn(theta, tau, gamma, initial_parity)
    logger.info(f"Inverting coupled characteristic function at tau={tau}, gamma={gamma}")
    spectrum = invert_charfn(
        samples,
        support="half",
        tau=tau,
        model=ModelKind.COUPLED,
        meta={"gamma": gamma, "initial_parity": initial_parity.value},
    )
    spectrum.check_normalization(NORMALIZATION_EPS, upper_tol=1e-6)
    return spectrum


def coupled_spectrum_approx(tau: float, gamma: float, max_n: Optional[int] = None) -> Spectrum:
    """
    Order-gamma^2 coupled spectrum for an atom entering in the lower state.

    Even lines carry rho0 (1 - gamma^2) - gamma^2 (2 tau + 1)/2 rho0' - gamma^2 tau/2 rho0'',
    odd lines (gamma^2/2)(rho0_n + rho0_{n+1}), with the e^{-2 tau0} corrections on
    the central lines. Tail lines where the expansion turns negative are set to 0.

    Raises:
        DomainError: If gamma is outside (0, 0.3] or tau <= 0
    """
    tau = validate_tau(tau, strictly_positive=True)
    gamma = _check_coupled_gamma(gamma)
    g2 = gamma ** 2
    if not g2 <= tau <= 1 / g2:
        logger.warning(f"coupled approximation used outside gamma^2 << tau << gamma^-2 (tau={tau}, gamma={gamma})")

    max_n = default_window(tau) if max_n is None else int(max_n)
    rho0 = {}
    even = {}
    for n in range(max_n + 2):
        value, first, second = stoch0_intensity_derivatives(n, tau)
        rho0[n] = value
        even[n] = value * (1 - g2) - g2 * (2 * tau + 1) / 2 * first - g2 * tau / 2 * second

    intensities = {}
    for n in range(-max_n, max_n + 1):
        intensities[2 * n] = even[abs(n)]
        intensities[2 * n + 1] = (g2 / 2) * (rho0[abs(n)] + rho0[abs(n + 1)])
    intensities[-2 * max_n - 1] = intensities[2 * max_n + 1]

    tau0 = (1 + g2) * tau / g2
    burst = g2 * math.exp(-2 * tau0)
    intensities[0] += burst / 2
    for k in (-1, 1):
        intensities[k] -= burst / 2
    for k in (-2, 2):
        intensities[k] += burst / 4

    negative = [k for k, value in intensities.items() if value < 0]
    if negative:
        logger.debug(f"clamping {len(negative)} tail lines of the coupled approximation")
    clamped = {k: max(value, 0.0) for k, value in intensities.items()}
    return Spectrum.from_intensities(clamped, tau, ModelKind.COUPLED_APPROX, meta={"gamma": gamma, "max_n": max_n})
