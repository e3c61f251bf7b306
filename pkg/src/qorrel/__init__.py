"""Irreducible multi-party correlations in n-qutrit GHZ-type and maximal-slice states."""

__version__ = "0.1.0"

from .closed_forms import (
    CorrelationSpectrum,
    h2,
    h3,
    theorem1_spectrum,
    theorem2_spectrum,
    theorem3_spectrum,
    total_correlation,
)
from .maxent import SolverConfig, regularized_spectrum, solve
from .states import FamilyParams, ghz1, ghz1_pure, ghz2, ghz2_pure, ms_state
from .tensor import DensityMatrix, SiteOperator, partial_trace, von_neumann_entropy

__all__ = [
    "CorrelationSpectrum",
    "DensityMatrix",
    "FamilyParams",
    "SiteOperator",
    "SolverConfig",
    "ghz1",
    "ghz1_pure",
    "ghz2",
    "ghz2_pure",
    "h2",
    "h3",
    "ms_state",
    "partial_trace",
    "regularized_spectrum",
    "solve",
    "theorem1_spectrum",
    "theorem2_spectrum",
    "theorem3_spectrum",
    "total_correlation",
    "von_neumann_entropy",
]
