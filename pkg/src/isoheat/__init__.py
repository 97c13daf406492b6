"""Isoperimetry, Faber-Krahn bounds and heat-kernel oracles for ``e^(-1/|x|^alpha) dx`` on R^n minus the origin."""

from .errors import (
    CalibrationError,
    ConvergenceError,
    DomainError,
    FitError,
    IsoheatError,
    NumericalConsistencyError,
    UnderflowError,
    WindowError,
)
from .measure import DEFAULT_QUAD, QuadratureSpec, RadialWeight

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ConvergenceError",
    "DEFAULT_QUAD",
    "DomainError",
    "FitError",
    "IsoheatError",
    "NumericalConsistencyError",
    "QuadratureSpec",
    "RadialWeight",
    "UnderflowError",
    "WindowError",
]
