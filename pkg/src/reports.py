"""
Figure datasets for the Kapitza-Dirac simulator.

This module builds the columnar data behind the standard comparison figures:
the velocity-averaged spectrum at large tau, the averaged QM lines at
gamma = 0.2, the small-tau line growth of both models and the initial
behaviour of the central line. Plotting is left to external tools.
"""

import logging
from typing import Dict, List, Optional

import numpy as np

try:
    from .analysis import (
        classical_density, deflection_angle, initial_slope, smooth_spectrum,
        smoothed_asymptotic_direct, smoothed_classical,
    )
    from .models import HalfIndex, ModelParams, PhysicalContext, RunConfig, VelocityProfile
    from .numerics import gaussian_smooth
    from .qm_model import qm_intensity_curve, qm0_intensity, qm_intensity, qm_smoothed_intensity
    from .spectrum_files import DataTable, make_header
    from .stochastic_model import coupled_spectrum, stoch0_intensity, stoch0_intensity_curve
    from .validators import ValidationError
except ImportError:
    from analysis import (
        classical_density, deflection_angle, initial_slope, smooth_spectrum,
        smoothed_asymptotic_direct, smoothed_classical,
    )
    from models import HalfIndex, ModelParams, PhysicalContext, RunConfig, VelocityProfile
    from numerics import gaussian_smooth
    from qm_model import qm_intensity_curve, qm0_intensity, qm_intensity, qm_smoothed_intensity
    from spectrum_files import DataTable, make_header
    from stochastic_model import coupled_spectrum, stoch0_intensity, stoch0_intensity_curve
    from validators import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.2
DEFAULT_SIGMA_REL = 0.025
FIGURE_IDS = (2, 3, 5, 6)
AGREEMENT_WINDOW = 15
# lines beyond |n| = 256 carry nothing for tau <= 1
CENTRAL_LINE_POINTS = 1024


def _qm0_line(key: HalfIndex, t):
    return qm0_intensity(key.as_integer(), t)


def _stoch0_line(key: HalfIndex, t):
    return stoch0_intensity_curve(key.as_integer(), t)


class FigureReporter:
    """Builds figure datasets from the model modules."""

    def __init__(
        self,
        gamma: float = DEFAULT_GAMMA,
        sigma_rel: float = DEFAULT_SIGMA_REL,
        ctx: Optional[PhysicalContext] = None,
    ):
        self.gamma = gamma
        self.profile = VelocityProfile(sigma_rel)
        self.ctx = ctx or PhysicalContext.sodium()

    def build(self, figure_id: int, config: Optional[RunConfig] = None, tau: Optional[float] = None) -> DataTable:
        """
        Dataset for one figure.

        Args:
            figure_id: 2, 3, 5 or 6
            config: Run configuration echoed into the header
            tau: Overrides the transit time of figure 2

        Raises:
            ValidationError: If the figure id is unknown
        """
        logger.info(f"Building figure {figure_id}")
        if figure_id == 2:
            return self.figure2(tau=50.0 if tau is None else tau, config=config)
        if figure_id == 3:
            return self.figure3(config=config)
        if figure_id == 5:
            return self.figure5(config=config)
        if figure_id == 6:
            return self.figure6(config=config)
        raise ValidationError(f"unknown figure {figure_id}; choose from {', '.join(map(str, FIGURE_IDS))}.")

    def figure2(self, tau: float = 50.0, max_n: Optional[int] = None, config: Optional[RunConfig] = None) -> DataTable:
        """Velocity-averaged QM0, stochastic and classical lines at large tau."""
        max_n = int(tau + 5) if max_n is None else max_n
        per_line: Dict[int, List[float]] = {}
        for n in range(max_n + 1):
            key = HalfIndex(2 * n)
            per_line[n] = [
                smooth_spectrum(_qm0_line, key, tau, self.profile),
                smooth_spectrum(_stoch0_line, key, tau, self.profile),
                smoothed_classical(key, tau, self.profile),
                smoothed_asymptotic_direct(key, tau, self.profile),
                float(classical_density(n, tau)),
            ]

        rows = []
        for n in range(-max_n, max_n + 1):
            key = HalfIndex(2 * n)
            rows.append([key.k, key.label()] + per_line[abs(n)] + [deflection_angle(key, self.ctx)])

        window = [values for n, values in per_line.items() if n <= AGREEMENT_WINDOW]
        peak = max(max(values[:3]) for values in window)
        agreement = {
            "window": AGREEMENT_WINDOW,
            "qm0_vs_classical": max(abs(v[0] - v[2]) for v in window) / peak,
            "stoch0_vs_classical": max(abs(v[1] - v[2]) for v in window) / peak,
            "qm0_vs_stoch0": max(abs(v[0] - v[1]) for v in window) / peak,
        }
        header = make_header(
            "figure", config, figure=2,
            params={"tau": tau, "sigma_rel": self.profile.sigma_rel},
            agreement=agreement,
        )
        columns = [
            "k", "n", "qm0_smoothed", "stoch0_smoothed", "classical_smoothed",
            "classical_direct", "classical", "deflection_rad",
        ]
        return DataTable(header, columns, rows)

    def figure3(self, taus=None, max_k: int = 4, config: Optional[RunConfig] = None) -> DataTable:
        """QM lines k = 0..max_k at gamma = 0.2: velocity-averaged and phase-averaged."""
        taus = np.round(np.arange(0.2, 6.0 + 1e-9, 0.1), 10) if taus is None else np.asarray(taus, dtype=float)
        gamma = self.gamma
        rows = []
        for tau in taus:
            params = ModelParams(float(tau), gamma)
            for k in range(max_k + 1):
                key = HalfIndex(k)
                averaged = gaussian_smooth(lambda t, k=k: qm_intensity_curve(k, t, gamma), float(tau), self.profile.sigma_rel)
                rows.append([key.k, key.label(), float(tau), qm_smoothed_intensity(key, params), max(averaged, 0.0)])
        header = make_header(
            "figure", config, figure=3,
            params={"gamma": gamma, "sigma_rel": self.profile.sigma_rel},
        )
        return DataTable(header, ["k", "n", "tau", "qm_smoothed", "qm_velocity_averaged"], rows)

    def figure5(self, taus=None, max_n: int = 5, config: Optional[RunConfig] = None) -> DataTable:
        """Growth of lines n = 0..max_n in both gamma -> 0 models."""
        taus = np.round(np.arange(0.0, 3.0 + 1e-9, 0.05), 10) if taus is None else np.asarray(taus, dtype=float)
        rows = []
        for n in range(max_n + 1):
            key = HalfIndex(2 * n)
            for tau in taus:
                rows.append([key.k, key.label(), float(tau), float(qm0_intensity(n, float(tau))), stoch0_intensity(n, float(tau))])
        header = make_header("figure", config, figure=5, params={"max_n": max_n})
        return DataTable(header, ["k", "n", "tau", "qm0", "stoch0"], rows)

    def figure6(self, taus=None, config: Optional[RunConfig] = None) -> DataTable:
        """Central line of every model for 0 <= tau <= 1, with initial slopes in the header."""
        taus = np.round(np.arange(0.0, 1.0 + 1e-9, 0.01), 10) if taus is None else np.asarray(taus, dtype=float)
        gamma = self.gamma
        rows = []
        for tau in taus:
            params = ModelParams(float(tau), gamma)
            rows.append([
                0, "0", float(tau),
                qm_intensity(0, params),
                qm_smoothed_intensity(0, params),
                stoch0_intensity(0, float(tau)),
                self._coupled_central(float(tau)),
            ])
        slopes = {
            "qm": initial_slope(lambda t: qm_intensity(0, ModelParams(t, gamma))),
            "stoch0": initial_slope(lambda t: stoch0_intensity(0, t)),
        }
        header = make_header("figure", config, figure=6, params={"gamma": gamma}, slopes=slopes)
        return DataTable(header, ["k", "n", "tau", "qm", "qm_smoothed", "stoch0", "coupled"], rows)

    def _coupled_central(self, tau: float) -> float:
        if tau == 0:
            return 1.0
        return coupled_spectrum(tau, self.gamma, points=CENTRAL_LINE_POINTS).intensity(0)

    @staticmethod
    def summary_lines(table: DataTable) -> List[str]:
        """Short human-readable digest of a figure header."""
        header = table.header
        lines = [f"figure {header.get('figure')}: {len(table.rows)} rows, columns {', '.join(table.columns)}"]
        for name in ("agreement", "slopes"):
            for key, value in sorted((header.get(name) or {}).items()):
                lines.append(f"  {name}.{key} = {value:.6g}" if isinstance(value, float) else f"  {name}.{key} = {value}")
        return lines
