"""
Error types and argument validation for the Kapitza-Dirac simulator.

This module provides the exception hierarchy shared by every model module
and the validation helpers used by the library entry points and the CLI.
"""

import math
from typing import Any, Dict, Iterable, Optional, Sequence


class KDSimError(Exception):
    """Base exception for simulator errors."""
    pass


class ValidationError(KDSimError):
    """Exception raised for invalid arguments or configuration."""
    pass


class DomainError(ValidationError):
    """Exception raised when an argument lies outside a function's domain."""
    pass


class IncompatibleSpectraError(ValidationError):
    """Exception raised when two spectra cannot be compared."""
    pass


class SpectrumFileError(ValidationError):
    """Exception raised when a spectrum or figure file cannot be parsed."""
    pass


class NumericalError(KDSimError):
    """Base exception for numerical failures."""
    pass


class ConvergenceError(NumericalError):
    """Exception raised when an iterative scheme fails to converge."""
    pass


class TruncationError(NumericalError):
    """Exception raised when a computed window misses too much probability."""
    pass


class NonPhysicalSpectrumError(NumericalError):
    """Exception raised when an inversion produces a clearly negative intensity."""
    pass


def validate_finite(value: float, name: str) -> float:
    """
    Validate that a value is a finite real number.

    Args:
        value: Value to check
        name: Name used in the error message

    Returns:
        The value as a float

    Raises:
        DomainError: If the value is not a finite number
    """
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a real number, got {value!r}.")
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}.")
    return value


def validate_tau(tau: float, strictly_positive: bool = False) -> float:
    """
    Validate a dimensionless transit time.

    Args:
        tau: Transit time
        strictly_positive: Reject tau == 0 as well

    Returns:
        tau as a float

    Raises:
        DomainError: If tau is negative (or zero when strictly_positive)
    """
    tau = validate_finite(tau, "tau")
    if tau < 0 or (strictly_positive and tau == 0):
        bound = "> 0" if strictly_positive else ">= 0"
        raise DomainError(f"tau must be {bound}, got {tau}.")
    return tau


def validate_gamma(gamma: float, upper: float = 1.0, allow_zero: bool = False) -> float:
    """
    Validate the coupling ratio gamma = Omega_R / Delta.

    Args:
        gamma: Coupling ratio
        upper: Exclusive upper bound
        allow_zero: Accept gamma == 0 for limiting forms

    Returns:
        gamma as a float

    Raises:
        DomainError: If gamma is outside the accepted range
    """
    gamma = validate_finite(gamma, "gamma")
    lower_ok = gamma >= 0 if allow_zero else gamma > 0
    if not (lower_ok and gamma < upper):
        low = "[0" if allow_zero else "(0"
        raise DomainError(f"gamma must lie in {low}, {upper}), got {gamma}.")
    return gamma


def validate_phase(zeta: float) -> float:
    """Validate a standing-wave phase; any finite value is reduced mod pi by callers."""
    return validate_finite(zeta, "zeta")


def validate_sigma_rel(sigma_rel: float) -> float:
    """
    Validate a relative transit-time spread.

    Raises:
        ValidationError: If sigma_rel is outside (0, 0.2]
    """
    sigma_rel = validate_finite(sigma_rel, "sigma_rel")
    if not 0 < sigma_rel <= 0.2:
        raise ValidationError(f"sigma_rel must lie in (0, 0.2], got {sigma_rel}.")
    return sigma_rel


def validate_trajectories(trajectories: Any) -> int:
    """Validate a Monte Carlo trajectory count."""
    if isinstance(trajectories, bool) or not isinstance(trajectories, int):
        raise ValidationError(f"trajectories must be an integer, got {trajectories!r}.")
    if trajectories < 1:
        raise ValidationError(f"trajectories must be at least 1, got {trajectories}.")
    return trajectories


def validate_seed(seed: Any) -> int:
    """Validate a 64-bit seed."""
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError(f"seed must be an integer, got {seed!r}.")
    if not 0 <= seed < 2 ** 64:
        raise ValidationError(f"seed must fit in 64 unsigned bits, got {seed}.")
    return seed


def validate_tau_grid(tau_grid: Sequence[float], max_step: float = 0.01) -> None:
    """
    Validate a transit-time grid for the monotonicity discriminator.

    Raises:
        ValidationError: If the grid is empty, not strictly increasing,
            touches tau <= 0 or has a step above max_step
    """
    values = [validate_finite(t, "tau grid value") for t in tau_grid]
    if len(values) < 2:
        raise ValidationError("tau grid needs at least two points.")
    if values[0] <= 0:
        raise ValidationError(f"tau grid must start above 0, got {values[0]}.")
    for left, right in zip(values, values[1:]):
        if right <= left:
            raise ValidationError("tau grid must be strictly increasing.")
        if right - left > max_step * (1 + 1e-9):
            raise ValidationError(
                f"tau grid step {right - left:.4g} exceeds {max_step}."
            )


def validate_choice(value: Any, choices: Iterable[str], name: str) -> str:
    """Validate that value is one of the allowed strings."""
    allowed = list(choices)
    if value not in allowed:
        raise ValidationError(f"{name} must be one of {', '.join(allowed)}, got {value!r}.")
    return value


def validate_run_config(data: Dict[str, Any]) -> Dict[str, Any]:
    """
    Validate and normalize a full run configuration.

    Args:
        data: Dictionary with the resolved CLI parameters

    Returns:
        Dictionary with cleaned values

    Raises:
        ValidationError: If any field is invalid
    """
    cleaned = dict(data)

    if cleaned.get("tau") is not None:
        cleaned["tau"] = validate_tau(cleaned["tau"])
    if cleaned.get("gamma") is not None:
        cleaned["gamma"] = validate_gamma(cleaned["gamma"], allow_zero=True)
    if cleaned.get("sigma_rel") is not None:
        cleaned["sigma_rel"] = validate_sigma_rel(cleaned["sigma_rel"])
    if cleaned.get("trajectories") is not None:
        cleaned["trajectories"] = validate_trajectories(cleaned["trajectories"])
    if cleaned.get("seed") is not None:
        cleaned["seed"] = validate_seed(cleaned["seed"])
    if cleaned.get("initial_parity") is not None:
        cleaned["initial_parity"] = validate_choice(
            cleaned["initial_parity"], ("even", "odd"), "initial parity"
        )
    if cleaned.get("format") is not None:
        cleaned["format"] = validate_choice(cleaned["format"], ("csv", "json"), "format")

    max_n: Optional[int] = cleaned.get("max_n")
    if max_n is not None and max_n < 0:
        raise ValidationError(f"max_n must be nonnegative, got {max_n}.")

    return cleaned
