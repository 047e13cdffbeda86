"""
KD-Sim: quantum and stochastic models of Kapitza-Dirac scattering.

This package provides the line-intensity models, their characteristic
functions, a Monte Carlo sampler, comparison tools and a command-line
interface for producing spectrum and figure datasets.
"""

from .models import HalfIndex, MCConfig, ModelKind, ModelParams, Parity, PhysicalContext, Spectrum
from .montecarlo import estimate_spectrum
from .qm_model import qm0_intensity, qm_intensity, qm_line_intensities
from .settings import __version__
from .stochastic_model import coupled_spectrum, stoch0_intensity, stoch0_spectrum

__author__ = "KD-Sim developers"

__all__ = [
    "HalfIndex", "MCConfig", "ModelKind", "ModelParams", "Parity", "PhysicalContext", "Spectrum",
    "coupled_spectrum", "estimate_spectrum", "qm0_intensity", "qm_intensity", "qm_line_intensities",
    "stoch0_intensity", "stoch0_spectrum",
]
