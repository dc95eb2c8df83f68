"""Numerical analysis of a predator-prey map with cooperative hunting."""
__version__ = "0.1.0"

from .errors import (ConvergenceError, CoopHuntError, DivergenceError, ParameterError,  # noqa: E402
                     RegimeError)
from .model import Params, RawParams, State, nondimensionalize, orbit, step  # noqa: E402

__all__ = ["__version__", "Params", "RawParams", "State", "nondimensionalize", "orbit", "step",
           "CoopHuntError", "ParameterError", "ConvergenceError", "DivergenceError", "RegimeError"]
