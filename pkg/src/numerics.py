"""
Special functions and quadrature kernels used by every model module.

Bessel functions of the first kind come from Miller's downward recurrence,
exponentially scaled modified Bessel functions from a log-space power series
(large-argument expansion far out), and integrals from adaptive
Gauss-Legendre bisection.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple, Union

import numpy as np

try:
    from .validators import ConvergenceError, DomainError, NumericalError, validate_tau
except ImportError:
    from validators import ConvergenceError, DomainError, NumericalError, validate_tau

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_RULE_ORDER = 20
DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-14
MAX_INTERVALS = 4096
KERNEL_HALF_WIDTH = 5.0

# |n| = tau is evaluated just inside the classically allowed region
EDGE_SHRINK = 1e-9

_RESCALE_LIMIT = 1e250
_RESCALE_FACTOR = 1e-250
_TINY_ARGUMENT = 1e-20
_I_ASYMPTOTIC_X = 60.0


def log_factorials(m: int) -> np.ndarray:
    """log(k!) for k = 0..m."""
    if m < 1:
        return np.zeros(1)
    return np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, m + 1, dtype=float)))))


def log_power(exponent: ArrayLike, base: ArrayLike) -> np.ndarray:
    """exponent * log(base) with the convention 0 * log(0) = 0."""
    exponent = np.asarray(exponent, dtype=float)
    base = np.asarray(base, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(base > 0, np.log(np.where(base > 0, base, 1.0)), -np.inf)
        return np.where(exponent == 0, 0.0, exponent * logs)


def _miller_start(order: int, x_max: float) -> int:
    top = max(float(order), x_max)
    return int(top + 10.0 * math.sqrt(top) + 20)


def _miller(max_order: int, xs: np.ndarray) -> np.ndarray:
    """Normalized downward recurrence for strictly positive arguments."""
    start = _miller_start(max_order, float(xs.max()))
    table = np.zeros((max_order + 1, xs.size))
    upper = np.zeros_like(xs)
    current = np.ones_like(xs)
    # J_0 + 2 * sum of J_2k equals 1
    norm = 2.0 * current if start % 2 == 0 else np.zeros_like(xs)

    for k in range(start, 0, -1):
        lower = (2.0 * k / xs) * current - upper
        upper, current = current, lower
        order = k - 1
        if order <= max_order:
            table[order] = current
        if order == 0:
            norm += current
        elif order % 2 == 0:
            norm += 2.0 * current

        big = np.abs(current) > _RESCALE_LIMIT
        if big.any():
            current[big] *= _RESCALE_FACTOR
            upper[big] *= _RESCALE_FACTOR
            norm[big] *= _RESCALE_FACTOR
            table[:, big] *= _RESCALE_FACTOR

    return table / norm


def bessel_j_table(max_order: int, x: ArrayLike) -> np.ndarray:
    """
    Bessel functions J_0 .. J_max_order at every point of x.

    Args:
        max_order: Highest order needed (>= 0)
        x: Real argument(s); negative values use J_n(-x) = (-1)^n J_n(x)

    Returns:
        Array of shape (max_order + 1,) + shape(x)

    Raises:
        DomainError: If max_order < 0 or any x is not finite
    """
    if max_order < 0:
        raise DomainError(f"Bessel order must be >= 0, got {max_order}.")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite.")

    flat = x.ravel()
    magnitude = np.abs(flat)
    out = np.zeros((max_order + 1, flat.size))
    out[0, magnitude == 0] = 1.0

    tiny = (magnitude > 0) & (magnitude < _TINY_ARGUMENT)
    if tiny.any():
        orders = np.arange(max_order + 1)
        logs = log_power(orders[:, None], magnitude[tiny][None, :] / 2) - log_factorials(max_order)[:, None]
        out[:, tiny] = np.exp(logs)

    regular = magnitude >= _TINY_ARGUMENT
    if regular.any():
        out[:, regular] = _miller(max_order, magnitude[regular])

    negative = flat < 0
    if negative.any():
        odd = np.arange(max_order + 1) % 2 == 1
        out[np.ix_(odd, negative)] *= -1.0

    return out.reshape((max_order + 1,) + x.shape)


def bessel_j(n: int, x: ArrayLike) -> ArrayLike:
    """
    Bessel function of the first kind J_n(x) for integer n >= 0.

    Callers needing negative orders use J_-n = (-1)^n J_n, see bessel_j_signed.

    Raises:
        DomainError: If n < 0 or x is not finite
    """
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"Bessel order must be a nonnegative integer, got {n!r}.")
    n = int(n)
    values = bessel_j_table(n, x)[n]
    return float(values) if np.ndim(values) == 0 else values


def bessel_j_signed(n: int, x: ArrayLike) -> ArrayLike:
    """J_n(x) for any integer order."""
    value = bessel_j(abs(n), x)
    return -value if n < 0 and n % 2 else value


def _i_scaled_series(n: int, x: float) -> float:
    count = int(x + 10.0 * math.sqrt(x) + 30)
    k = np.arange(count)
    lf = log_factorials(count + n)
    logs = (2 * k + n) * math.log(x / 2) - lf[k] - lf[k + n] - x
    top = logs.max()
    return float(math.exp(top) * np.sum(np.exp(logs - top)))


def _i_scaled_asymptotic(n: int, x: float) -> float:
    mu = 4.0 * n * n
    term = 1.0
    total = 1.0
    for k in range(1, 500):
        ratio = -(mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(ratio) >= 1.0:
            break
        term *= ratio
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total / math.sqrt(2 * math.pi * x)


def bessel_i_scaled(n: int, x: float) -> float:
    """
    Exponentially scaled modified Bessel function e^{-x} I_n(x).

    Args:
        n: Nonnegative integer order
        x: Argument >= 0

    Returns:
        Value in (0, 1]; 0 only for n > 0 at x = 0

    Raises:
        DomainError: If x < 0, x is not finite or n is not a nonnegative integer
    """
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"Bessel order must be a nonnegative integer, got {n!r}.")
    n = int(n)
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"bessel_i_scaled needs a finite x >= 0, got {x}.")
    if x == 0:
        return 1.0 if n == 0 else 0.0
    if x >= _I_ASYMPTOTIC_X and x >= 2.0 * n * n:
        return _i_scaled_asymptotic(n, x)
    return _i_scaled_series(n, x)


@dataclass(frozen=True)
class QuadratureRule:
    """
    Gauss-Legendre rule on [-1, 1].

    Args:
        nodes: Abscissae, strictly increasing and symmetric about 0
        weights: Positive weights summing to 2
        order: Number of nodes
    """
    nodes: Tuple[float, ...]
    weights: Tuple[float, ...]
    order: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes)
        weights = np.asarray(self.weights)
        if self.order < 1 or nodes.size != self.order or weights.size != self.order:
            raise DomainError("quadrature rule needs `order` nodes and weights.")
        if np.any(weights <= 0) or abs(weights.sum() - 2.0) > 1e-12:
            raise DomainError("Gauss-Legendre weights must be positive and sum to 2.")
        if np.any(np.diff(nodes) <= 0) or np.any(np.abs(nodes) >= 1):
            raise DomainError("nodes must be strictly increasing inside (-1, 1).")
        if np.max(np.abs(nodes + nodes[::-1])) > 1e-12:
            raise DomainError("nodes must be symmetric about 0.")

    @classmethod
    def gauss_legendre(cls, order: int = DEFAULT_RULE_ORDER) -> "QuadratureRule":
        return gauss_legendre_rule(order)

    def mapped(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weights transplanted to [a, b]."""
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        return mid + half * np.asarray(self.nodes), half * np.asarray(self.weights)

    def composite(self, a: float, b: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weights of the rule repeated on `panels` equal subintervals."""
        edges = np.linspace(a, b, panels + 1)
        parts = [self.mapped(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


@lru_cache(maxsize=32)
def gauss_legendre_rule(order: int = DEFAULT_RULE_ORDER) -> QuadratureRule:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(tuple(float(v) for v in nodes), tuple(float(v) for v in weights), order)


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(f(x))
    except (TypeError, ValueError):
        values = None
    if values is None or values.shape != x.shape:
        values = np.array([f(float(point)) for point in x])
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"integrand is not finite on [{x.min():.6g}, {x.max():.6g}].")
    return values


def _panel(f: Callable, lo: float, hi: float, rule: QuadratureRule):
    x, w = rule.mapped(lo, hi)
    return np.dot(w, _evaluate(f, x))


def quad(
    f: Callable,
    a: float,
    b: float,
    rule: QuadratureRule = None,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    max_intervals: int = MAX_INTERVALS,
):
    """
    Adaptive Gauss-Legendre integral of f over [a, b].

    f is called with an array of nodes when it accepts one, otherwise point by
    point. A panel is accepted once its two halves agree with it to rel_tol
    (relative to the whole integral, shared out by panel width).

    Raises:
        ConvergenceError: If more than max_intervals panels are needed
    """
    rule = rule or gauss_legendre_rule()
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    whole = _panel(f, a, b, rule)
    scale = abs(whole)
    width = b - a
    stack = [(a, b, whole)]
    accepted = []
    intervals = 1

    while stack:
        lo, hi, estimate = stack.pop()
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise ConvergenceError(f"quadrature panel collapsed near {lo:.6g}.")
        left = _panel(f, lo, mid, rule)
        right = _panel(f, mid, hi, rule)
        refined = left + right
        allowed = max(rel_tol * max(scale, abs(refined)), abs_tol) * (hi - lo) / width
        if abs(refined - estimate) <= allowed:
            accepted.append(refined)
            continue
        intervals += 1
        if intervals > max_intervals:
            raise ConvergenceError(
                f"quadrature on [{a:.6g}, {b:.6g}] did not converge within {max_intervals} panels."
            )
        stack.append((mid, hi, right))
        stack.append((lo, mid, left))

    logger.debug(f"quad on [{a:.6g}, {b:.6g}] used {intervals} panels")
    if any(np.iscomplexobj(v) for v in accepted):
        return sign * complex(sum(accepted))
    return sign * math.fsum(float(v) for v in accepted)


def _kernel_window(tau: float, sigma_rel: float) -> Tuple[float, float, float]:
    tau = validate_tau(tau, strictly_positive=True)
    if not math.isfinite(sigma_rel) or sigma_rel <= 0:
        raise DomainError(f"sigma_rel must be > 0, got {sigma_rel}.")
    sigma = sigma_rel * tau
    return sigma, max(0.0, tau - KERNEL_HALF_WIDTH * sigma), tau + KERNEL_HALF_WIDTH * sigma


def _kernel_mass(tau: float, sigma: float, lo: float, hi: float) -> float:
    root = sigma * math.sqrt(2.0)
    return sigma * math.sqrt(math.pi / 2) * (math.erf((hi - tau) / root) - math.erf((lo - tau) / root))


def gaussian_smooth(
    g: Callable,
    tau: float,
    sigma_rel: float = 0.025,
    rule: QuadratureRule = None,
    rel_tol: float = DEFAULT_REL_TOL,
) -> float:
    """
    Average g(tau') over a Gaussian spread of transit times.

    The kernel has standard deviation sigma = sigma_rel * tau, is cut at
    +-5 sigma (and at tau' = 0) and renormalized over that window, so a
    constant g is returned unchanged.

    Raises:
        DomainError: If tau <= 0 or sigma_rel <= 0
    """
    sigma, lo, hi = _kernel_window(tau, sigma_rel)

    def weighted(t):
        return g(t) * np.exp(-0.5 * ((t - tau) / sigma) ** 2)

    return quad(weighted, lo, hi, rule, rel_tol) / _kernel_mass(tau, sigma, lo, hi)


def gaussian_smooth_inverse_sqrt(
    h: Callable,
    edge: float,
    tau: float,
    sigma_rel: float = 0.025,
    rule: QuadratureRule = None,
    rel_tol: float = DEFAULT_REL_TOL,
) -> float:
    """
    Gaussian average of h(t) / sqrt(t^2 - edge^2) over t > |edge|.

    The endpoint singularity is removed with t = |edge| cosh(u), which turns
    dt / sqrt(t^2 - edge^2) into du.

    Raises:
        DomainError: If edge = 0 and the window reaches t = 0
    """
    sigma, lo, hi = _kernel_window(tau, sigma_rel)
    edge = abs(float(edge))
    mass = _kernel_mass(tau, sigma, lo, hi)

    def kernel(t):
        return np.exp(-0.5 * ((t - tau) / sigma) ** 2)

    if edge == 0:
        if lo == 0:
            raise DomainError("smoothing window reaches tau' = 0 where 1/tau' diverges.")
        return quad(lambda t: h(t) * kernel(t) / t, lo, hi, rule, rel_tol) / mass
    if hi <= edge:
        return 0.0

    u_lo = math.acosh(max(lo, edge) / edge)
    u_hi = math.acosh(hi / edge)

    def integrand(u):
        t = edge * np.cosh(u)
        return h(t) * kernel(t)

    return quad(integrand, u_lo, u_hi, rule, rel_tol) / mass
