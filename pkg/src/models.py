"""
Data models for the Kapitza-Dirac simulator.

This module defines the core data structures shared by the quantum and
stochastic models: line labels, spectra, model parameters, physical
constants, rate pairs, Monte Carlo and run configurations, and reports.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

try:
    from .validators import (
        DomainError, TruncationError, ValidationError, validate_gamma,
        validate_seed, validate_sigma_rel, validate_tau, validate_trajectories,
        validate_finite,
    )
except ImportError:
    from validators import (
        DomainError, TruncationError, ValidationError, validate_gamma,
        validate_seed, validate_sigma_rel, validate_tau, validate_trajectories,
        validate_finite,
    )


PLANCK = 6.62607015e-34
SPEED_OF_LIGHT = 299792458.0
EXPANSION_GAMMA_LIMIT = 0.25


class Parity(Enum):
    """Internal atomic state, labelled by the parity of the line it feeds."""
    EVEN = "even"
    ODD = "odd"


class ModelKind(Enum):
    """Enum for the spectrum models the simulator can produce."""
    QM0 = "qm0"
    QM = "qm"
    QM_SMOOTHED = "qm_smoothed"
    STOCH0 = "stoch0"
    COUPLED = "coupled"
    COUPLED_APPROX = "coupled_approx"
    MC = "mc"
    CLASSICAL = "classical"
    INVERTED = "inverted"


class Metric(Enum):
    """Enum for spectrum comparison metrics."""
    L1 = "l1"
    SUP = "sup"
    CHI2 = "chi2"


class ZetaMode(Enum):
    """How a Monte Carlo run chooses the standing-wave phase."""
    FIXED = "fixed"
    UNIFORM = "uniform"


class OutputFormat(Enum):
    """Dataset file formats."""
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True, order=True)
class HalfIndex:
    """
    Momentum line label stored as the doubled integer k = 2n.

    Even k are the integral (lower-state) lines, odd k the half-integral
    (upper-state) lines.
    """
    k: int

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, int):
            raise ValidationError(f"HalfIndex needs an integer k, got {self.k!r}.")

    @classmethod
    def from_n(cls, n: float) -> "HalfIndex":
        """Build a label from a line number n in half-integer steps."""
        doubled = 2 * float(n)
        if doubled != round(doubled):
            raise ValidationError(f"line number {n} is not a multiple of 1/2.")
        return cls(int(round(doubled)))

    @property
    def n(self) -> float:
        return self.k / 2

    @property
    def parity(self) -> Parity:
        return Parity.EVEN if self.k % 2 == 0 else Parity.ODD

    @property
    def is_integer(self) -> bool:
        return self.k % 2 == 0

    def as_integer(self) -> int:
        """Return n for an integral line, raising for half-integral ones."""
        if not self.is_integer:
            raise ValidationError(f"line k={self.k} is half-integral.")
        return self.k // 2

    def label(self) -> str:
        """Decimal form of n used in dataset files (0, 0.5, -1.5, ...)."""
        return f"{self.k // 2}" if self.is_integer else f"{self.k / 2:.1f}"

    def __neg__(self) -> "HalfIndex":
        return HalfIndex(-self.k)

    def __str__(self) -> str:
        return f"n={self.label()}"


KeyLike = Union[int, HalfIndex]


def as_half_index(key: KeyLike) -> HalfIndex:
    """Accept either a HalfIndex or a raw doubled integer."""
    return key if isinstance(key, HalfIndex) else HalfIndex(key)


@dataclass(frozen=True)
class Line:
    """Intensity of one spectral line, with its standard error when sampled."""
    intensity: float
    stderr: Optional[float] = None


@dataclass
class Spectrum:
    """
    Finite map from line labels to intensities.

    Args:
        entries: Line intensities keyed by HalfIndex
        tau: Dimensionless transit time the spectrum belongs to
        model: Model that produced it
        samples: Trajectory count for Monte Carlo estimates
        meta: Extra parameters worth echoing (gamma, sigma_rel, ...)
    """
    entries: Dict[HalfIndex, Line]
    tau: float
    model: ModelKind
    samples: Optional[int] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        normalized = {}
        for key, line in self.entries.items():
            if not isinstance(line, Line):
                line = Line(float(line))
            if not line.intensity >= 0:
                raise ValidationError(
                    f"negative intensity {line.intensity} at k={as_half_index(key).k}."
                )
            normalized[as_half_index(key)] = line
        self.entries = dict(sorted(normalized.items()))

    @classmethod
    def from_intensities(
        cls,
        intensities: Mapping[int, float],
        tau: float,
        model: ModelKind,
        stderr: Optional[Mapping[int, float]] = None,
        samples: Optional[int] = None,
        meta: Optional[Dict[str, Any]] = None,
    ) -> "Spectrum":
        """Build a spectrum from plain k -> intensity (and k -> stderr) maps."""
        stderr = stderr or {}
        entries = {
            HalfIndex(int(k)): Line(float(value), stderr.get(k))
            for k, value in intensities.items()
        }
        return cls(entries, float(tau), model, samples, dict(meta or {}))

    def intensity(self, key: KeyLike) -> float:
        line = self.entries.get(as_half_index(key))
        return line.intensity if line else 0.0

    def stderr(self, key: KeyLike) -> Optional[float]:
        line = self.entries.get(as_half_index(key))
        return line.stderr if line else None

    def keys(self) -> List[HalfIndex]:
        return list(self.entries)

    def lines(self) -> List[Tuple[HalfIndex, Line]]:
        return list(self.entries.items())

    def total(self) -> float:
        return math.fsum(line.intensity for line in self.entries.values())

    def peak(self) -> float:
        return max((line.intensity for line in self.entries.values()), default=0.0)

    @property
    def has_stderr(self) -> bool:
        return any(line.stderr is not None for line in self.entries.values())

    def window(self, max_k: int) -> "Spectrum":
        """Restrict to lines with |k| <= max_k."""
        kept = {key: line for key, line in self.entries.items() if abs(key.k) <= max_k}
        return replace(self, entries=kept, meta=dict(self.meta))

    def trimmed(self, floor: float = 0.0) -> "Spectrum":
        """Drop lines whose intensity is at or below floor."""
        kept = {key: line for key, line in self.entries.items() if line.intensity > floor}
        return replace(self, entries=kept, meta=dict(self.meta))

    def symmetrized(self) -> "Spectrum":
        """Average every line with its mirror image k -> -k."""
        keys = set(self.entries) | {-key for key in self.entries}
        entries = {}
        for key in keys:
            value = 0.5 * (self.intensity(key) + self.intensity(-key))
            entries[key] = Line(value)
        return replace(self, entries=entries, meta=dict(self.meta))

    def check_normalization(self, eps: float, upper_tol: float = 1e-9) -> float:
        """
        Verify that the total lies in [1 - eps, 1].

        Returns:
            The total intensity

        Raises:
            TruncationError: If too much probability lies outside the window
        """
        total = self.total()
        if total < 1 - eps or total > 1 + upper_tol:
            raise TruncationError(
                f"{self.model.value} spectrum at tau={self.tau} sums to {total:.12g}, "
                f"outside [1 - {eps:g}, 1]."
            )
        return total

    def to_dict(self) -> Dict[str, Any]:
        """Convert spectrum to dictionary for serialization."""
        return {
            "tau": self.tau,
            "model": self.model.value,
            "samples": self.samples,
            "meta": dict(self.meta),
            "lines": [
                {"k": key.k, "n": key.label(), "intensity": line.intensity, "stderr": line.stderr}
                for key, line in self.entries.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Spectrum":
        """Create spectrum from dictionary."""
        entries = {
            HalfIndex(int(row["k"])): Line(
                float(row["intensity"]),
                None if row.get("stderr") is None else float(row["stderr"]),
            )
            for row in data["lines"]
        }
        return cls(
            entries=entries,
            tau=float(data["tau"]),
            model=ModelKind(data["model"]),
            samples=data.get("samples"),
            meta=dict(data.get("meta") or {}),
        )

    def __str__(self) -> str:
        return f"{self.model.value} spectrum at tau={self.tau:g} ({len(self.entries)} lines)"


@dataclass(frozen=True)
class ModelParams:
    """
    Dimensionless model parameters.

    Args:
        tau: Transit time tau = t0 * gamma^2 * Delta / 2
        gamma: Coupling ratio Omega_R / Delta; 0 selects the gamma -> 0 limit
    """
    tau: float
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tau", validate_tau(self.tau))
        object.__setattr__(self, "gamma", validate_gamma(self.gamma, allow_zero=True))

    @property
    def in_expansion_regime(self) -> bool:
        """True where the order-gamma^2 formulas are trustworthy."""
        return self.gamma <= EXPANSION_GAMMA_LIMIT

    def tau_n(self, n: int) -> float:
        """Fast phase (1 + gamma^2) tau / gamma^2 + n pi / 2 of line n."""
        if self.gamma == 0:
            raise DomainError("tau_n is undefined for gamma = 0.")
        return (1 + self.gamma ** 2) * self.tau / self.gamma ** 2 + n * math.pi / 2

    @property
    def tau0(self) -> float:
        return self.tau_n(0)

    def with_tau(self, tau: float) -> "ModelParams":
        return ModelParams(tau, self.gamma)

    def to_dict(self) -> Dict[str, float]:
        return {"tau": self.tau, "gamma": self.gamma}


@dataclass(frozen=True)
class PhysicalContext:
    """
    Physical quantities behind the dimensionless parameters.

    Args:
        omega: Laser angular frequency (rad/s)
        omega0: Atomic resonance angular frequency (rad/s)
        delta: Detuning Delta = omega0 - omega, taken positive (rad/s)
        rabi: Resonant Rabi frequency Omega_R (rad/s)
        t0: Transit duration through the laser (s)
        wavelength: Laser wavelength (m)
        mass: Atomic mass (kg)
        speed: Longitudinal beam velocity (m/s)
        planck: Planck constant h (J s)
    """
    omega: float
    omega0: float
    delta: float
    rabi: float
    t0: float
    wavelength: float
    mass: float
    speed: float
    planck: float = PLANCK

    def __post_init__(self):
        for name in ("omega", "omega0", "delta", "rabi", "t0", "wavelength", "mass", "speed", "planck"):
            validate_finite(getattr(self, name), name)
        if self.t0 < 0:
            raise DomainError(f"t0 must be >= 0, got {self.t0}.")

    @property
    def gamma(self) -> float:
        if self.delta == 0:
            raise DomainError("gamma is undefined at zero detuning.")
        return self.rabi / self.delta

    @property
    def tau(self) -> float:
        return self.t0 * self.gamma ** 2 * self.delta / 2

    @property
    def line_spacing_rad(self) -> float:
        """Angular spacing 2h / (lambda M v) between neighbouring integral lines."""
        return 2 * self.planck / (self.wavelength * self.mass * self.speed)

    def to_params(self) -> ModelParams:
        return ModelParams(self.tau, self.gamma)

    def with_t0(self, t0: float) -> "PhysicalContext":
        return replace(self, t0=t0)

    @classmethod
    def from_params(cls, params: ModelParams, base: Optional["PhysicalContext"] = None) -> "PhysicalContext":
        """Choose rabi and t0 on top of base so that the context reproduces params."""
        base = base or cls.sodium()
        if params.gamma == 0:
            raise DomainError("a physical context needs gamma > 0.")
        rabi = params.gamma * base.delta
        t0 = 2 * params.tau / (params.gamma ** 2 * base.delta)
        return replace(base, rabi=rabi, t0=t0)

    @classmethod
    def sodium(cls, **overrides: float) -> "PhysicalContext":
        """
        Sodium D-line preset: 589 nm light, 10^3 m/s beam, tau = 3, gamma = 0.2.
        """
        wavelength = overrides.pop("wavelength", 589e-9)
        omega = overrides.pop("omega", 2 * math.pi * SPEED_OF_LIGHT / wavelength)
        delta = overrides.pop("delta", 5e9)
        values = {
            "omega": omega,
            "omega0": omega + delta,
            "delta": delta,
            "rabi": 0.2 * delta,
            "t0": 3e-8,
            "wavelength": wavelength,
            "mass": 3.818e-26,
            "speed": 1e3,
            "planck": PLANCK,
        }
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> Dict[str, float]:
        return {
            "omega": self.omega, "omega0": self.omega0, "delta": self.delta,
            "rabi": self.rabi, "t0": self.t0, "wavelength": self.wavelength,
            "mass": self.mass, "speed": self.speed, "planck": self.planck,
        }


@dataclass(frozen=True)
class AmplitudePair:
    """Upper and lower internal-state amplitudes; arrays broadcast elementwise."""
    upper: Any
    lower: Any

    def norm(self) -> Any:
        return abs(self.upper) ** 2 + abs(self.lower) ** 2


@dataclass(frozen=True)
class RatePair:
    """Up and down jump rates of the single-step Markov model, per unit tau."""
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = validate_finite(getattr(self, name), name)
            if value < 0:
                raise DomainError(f"{name} must be >= 0, got {value}.")

    @property
    def total(self) -> float:
        return self.alpha + self.beta

    def swapped(self) -> "RatePair":
        return RatePair(self.beta, self.alpha)


@dataclass(frozen=True)
class VelocityProfile:
    """Gaussian transit-time spread, sigma = sigma_rel * tau."""
    sigma_rel: float = 0.025

    def __post_init__(self):
        validate_sigma_rel(self.sigma_rel)

    def sigma(self, tau: float) -> float:
        return self.sigma_rel * tau


@dataclass
class ComparisonReport:
    """
    Outcome of comparing two spectra.

    For l1 and sup the tolerance is relative to `scale`, the peak intensity
    on the compared window; chi2 is reported per degree of freedom.
    """
    metric: Metric
    value: float
    residuals: Dict[HalfIndex, float]
    scale: float = 1.0
    tolerance: Optional[float] = None
    dof: Optional[int] = None

    @property
    def passed(self) -> Optional[bool]:
        if self.tolerance is None:
            return None
        return self.value <= self.tolerance * self.scale

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metric": self.metric.value,
            "value": self.value,
            "scale": self.scale,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "dof": self.dof,
            "residuals": [
                {"k": key.k, "n": key.label(), "residual": value}
                for key, value in sorted(self.residuals.items())
            ],
        }


@dataclass
class MonotonicityReport:
    """Ascents of tau^-n rho_n(tau) found on a grid."""
    n: int
    ascents: List[Tuple[float, float, float]]
    tolerance: float
    points: int

    @property
    def passed(self) -> bool:
        return not self.ascents

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "points": self.points,
            "ascents": [
                {"tau_left": left, "tau_right": right, "rise": rise}
                for left, right, rise in self.ascents
            ],
        }


@dataclass(frozen=True)
class MCConfig:
    """
    Monte Carlo run configuration.

    Args:
        trajectories: Number of independent paths
        seed: 64-bit seed; together with the block index it keys every stream
        tau: Transit time
        gamma: Coupling ratio; None selects the single-step model
        zeta_mode: Fixed phase or uniform over (-pi/2, pi/2]
        zeta: Phase used in fixed mode
        initial_parity: Internal state of the incoming atom (coupled model)
        block_size: Trajectories per random stream
    """
    trajectories: int
    seed: int = 0
    tau: float = 0.0
    gamma: Optional[float] = None
    zeta_mode: ZetaMode = ZetaMode.UNIFORM
    zeta: float = 0.0
    initial_parity: Parity = Parity.EVEN
    block_size: int = 65536

    def __post_init__(self):
        validate_trajectories(self.trajectories)
        validate_seed(self.seed)
        validate_tau(self.tau)
        validate_finite(self.zeta, "zeta")
        if self.gamma is not None:
            validate_gamma(self.gamma)
        if not self.coupled and self.initial_parity is Parity.ODD:
            raise ValidationError("an odd initial state needs the coupled model (set gamma).")
        if self.block_size < 1:
            raise ValidationError(f"block_size must be positive, got {self.block_size}.")

    @property
    def coupled(self) -> bool:
        return self.gamma is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trajectories": self.trajectories,
            "seed": self.seed,
            "tau": self.tau,
            "gamma": self.gamma,
            "zeta_mode": self.zeta_mode.value,
            "zeta": self.zeta,
            "initial_parity": self.initial_parity.value,
            "block_size": self.block_size,
        }


@dataclass
class TrajectoryState:
    """
    Position of one simulated atom.

    `parity` is the internal state: it follows the parity of k for a
    lower-state start and is flipped for an upper-state start.
    """
    k: int
    t: float = 0.0
    initial_parity: Parity = Parity.EVEN

    @property
    def parity(self) -> Parity:
        flipped = (self.k % 2 == 1) != (self.initial_parity is Parity.ODD)
        return Parity.ODD if flipped else Parity.EVEN

    @property
    def index(self) -> HalfIndex:
        return HalfIndex(self.k)


@dataclass
class RunConfig:
    """Fully resolved CLI run, echoed into every dataset header."""
    subcommand: str
    model: Optional[str] = None
    tau: Optional[float] = None
    gamma: Optional[float] = None
    sigma_rel: Optional[float] = None
    seed: Optional[int] = None
    trajectories: Optional[int] = None
    initial_parity: Optional[str] = None
    output: Optional[str] = None
    format: str = OutputFormat.CSV.value
    options: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "model": self.model,
            "tau": self.tau,
            "gamma": self.gamma,
            "sigma_rel": self.sigma_rel,
            "seed": self.seed,
            "trajectories": self.trajectories,
            "initial_parity": self.initial_parity,
            "output": self.output,
            "format": self.format,
            "options": dict(self.options),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {key: data.get(key) for key in (
            "model", "tau", "gamma", "sigma_rel", "seed", "trajectories",
            "initial_parity", "output",
        )}
        return cls(
            subcommand=data["subcommand"],
            format=data.get("format") or OutputFormat.CSV.value,
            options=dict(data.get("options") or {}),
            **known,
        )


def default_window(tau: float) -> int:
    """Largest |n| worth computing at tau; the tails beyond it are below 1e-12."""
    return int(math.ceil(tau + 10 * math.sqrt(tau) + 20))


def half_indices(max_k: int, parity: Optional[Parity] = None) -> Iterable[HalfIndex]:
    """Labels with |k| <= max_k, optionally restricted to one parity."""
    for k in range(-max_k, max_k + 1):
        key = HalfIndex(k)
        if parity is None or key.parity is parity:
            yield key
