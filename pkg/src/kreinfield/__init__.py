"""Krein-space spectral analysis of lattice Dirac and Klein-Gordon fields in static potentials."""

__version__ = "0.1.0"

from ._validation import DEFAULT_TOL, Tolerances  # noqa: E402
from .errors import (  # noqa: E402
    AmbiguousRealness,
    ConfigError,
    HypothesisViolated,
    KreinFieldError,
    NotAdmissible,
    NotAState,
    NotPositive,
)
from .krein import IntervalUnion, KreinStructure, SpectralDecomposition, classify_spectrum  # noqa: E402
from .lattice import Grid, PotentialSpec, build_grid, make_potential  # noqa: E402
from .models import DiracModel, KGModel, build_dirac, build_kg, classify_criticality, decompose  # noqa: E402

__all__ = [
    "DEFAULT_TOL",
    "Tolerances",
    "AmbiguousRealness",
    "ConfigError",
    "HypothesisViolated",
    "KreinFieldError",
    "NotAdmissible",
    "NotAState",
    "NotPositive",
    "IntervalUnion",
    "KreinStructure",
    "SpectralDecomposition",
    "classify_spectrum",
    "Grid",
    "PotentialSpec",
    "build_grid",
    "make_potential",
    "DiracModel",
    "KGModel",
    "build_dirac",
    "build_kg",
    "classify_criticality",
    "decompose",
]
