"""Subprincipal-controlled quasimodes and resolvent growth for h^2 D1 D2 + h b(t)."""

from ._validation import PreconditionError, ResolutionError, ValidationError
from .analysis import PowerLawFit, residual_sweep
from .params import make_partition, remainder_exponent
from .semiop import Grid2D, GridFunction
from .symbols import SubprincipalSymbol
from .transport import CutoffProfile, QuasimodeBuilder

__all__ = [
    "CutoffProfile",
    "Grid2D",
    "GridFunction",
    "PowerLawFit",
    "PreconditionError",
    "QuasimodeBuilder",
    "ResolutionError",
    "SubprincipalSymbol",
    "ValidationError",
    "make_partition",
    "remainder_exponent",
    "residual_sweep",
]

__version__ = "0.1.0"
