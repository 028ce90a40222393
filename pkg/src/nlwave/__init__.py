"""Spectral Galerkin simulation of nonlinearly damped semilinear wave equations.

Model: u_tt - Lap u + k ||u_t||^p u_t + f(u) = g on (0, pi)^d with Dirichlet
boundary conditions, f(s) = a s + b |s|^(q-1) s.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError,
    ConfigError,
    DegenerateError,
    DissipationViolated,
    DomainError,
    InsufficientResolution,
    LemmaDomainError,
    NLWError,
)
from .integrator import IntegratorConfig, TrajectoryRecord, integrate, step  # noqa: E402
from .model import ModelSpec, coercivity_constants, energy  # noqa: E402
from .spectral import Grid, SpectralField, State, to_physical, to_spectral  # noqa: E402

__all__ = [
    "__version__",
    "BlowUpError",
    "ConfigError",
    "DegenerateError",
    "DissipationViolated",
    "DomainError",
    "InsufficientResolution",
    "LemmaDomainError",
    "NLWError",
    "Grid",
    "SpectralField",
    "State",
    "to_physical",
    "to_spectral",
    "ModelSpec",
    "energy",
    "coercivity_constants",
    "IntegratorConfig",
    "TrajectoryRecord",
    "integrate",
    "step",
]
