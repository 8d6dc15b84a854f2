"""Lindstedt series for lower dimensional tori of Froeschle-type maps.

Multiple precision construction of the formal expansion, Pade and Log-Pade
pole analysis, Gevrey growth fits and residual diagnostics.
"""

from .errors import (ArchiveFormatError, ConsistencyError, ConvergenceError, DegenerateConfigError,
                     DegenerateTableError, InputError, LindstedtError, NearResonanceError,
                     NotFoundError, NumericalError, SingularSystemError, SolvabilityError)
from .numerics import FrequencySpec, PrecisionContext, eval_frequency
from .trigpoly import TrigPolyPair, norm_rho_r
from .potential import PotentialSpec, default_potential
from .lindstedt import LindstedtConfig, LindstedtSeries, run

__version__ = "0.1.0"

__all__ = [
    "ArchiveFormatError", "ConsistencyError", "ConvergenceError", "DegenerateConfigError",
    "DegenerateTableError", "InputError", "LindstedtError", "NearResonanceError", "NotFoundError",
    "NumericalError", "SingularSystemError", "SolvabilityError",
    "FrequencySpec", "PrecisionContext", "eval_frequency", "TrigPolyPair", "norm_rho_r",
    "PotentialSpec", "default_potential", "LindstedtConfig", "LindstedtSeries", "run",
]
