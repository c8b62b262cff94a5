"""1D finite-volume simulator for the relaxed (hyperbolic) compressible
Navier-Stokes system with Maxwell-Cattaneo stress and heat-flux laws."""

from .errors import BreakdownError, ConfigError, DomainError
from .model import ConservedState, GasParams, PrimitiveState, background_state
from .solver import (BreakdownCriteria, Grid, RunResult, RunStatus,
                     TimeControls)

__version__ = "0.1.0"

__all__ = [
    "BreakdownCriteria", "BreakdownError", "ConfigError", "ConservedState",
    "DomainError", "GasParams", "Grid", "PrimitiveState", "RunResult",
    "RunStatus", "TimeControls", "background_state", "__version__",
]
