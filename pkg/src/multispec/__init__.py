"""Spectral computations for unitary boundary conditions on a line with removed intervals."""

from .boundary import BoundaryMatrix, decompose, operator_split_form
from .eigensolver import det_D, solve_coefficients
from .intervals import ConfigError, IntervalConfig
from .pointspec import PointSpectrum, closed_form_spectrum, find_point_spectrum

__all__ = [
    "BoundaryMatrix",
    "ConfigError",
    "IntervalConfig",
    "PointSpectrum",
    "closed_form_spectrum",
    "decompose",
    "det_D",
    "find_point_spectrum",
    "operator_split_form",
    "solve_coefficients",
]

__version__ = "0.1.0"
