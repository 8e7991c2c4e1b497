"""Pseudospectral simulation and verification tools for the
Zakharov-Kuznetsov equation on a layer with a rectangular cross-section.

Modules
-------
domain
    Grid, transforms, spectral derivatives and fields.
weights
    Admissible weights, the cut-off ``eta`` and weighted norms.
linear
    Exact linear propagator, Duhamel integral and Picard iteration.
truncation
    The Lipschitz surrogate ``g_h`` of ``u**2/2``.
solver
    Integrating-factor RK4 time stepper and run driver.
diagnostics
    Conservation, Friedrichs constant, interpolation ratios, decay fits and
    energy identity residuals.
io, config, experiments, cli
    File formats, configuration documents, presets and the ``zk`` command.
"""
from .domain import DomainSpec, Field, TransverseMode
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DomainError,
    InstabilityError,
    UsageError,
    ZKError,
)
from .linear import LinearParams, duhamel_apply, picard_iterate, propagate, symbol
from .solver import SimulationState, SolverConfig, run, step
from .truncation import g_h_eval, g_h_prime
from .weights import WeightKind, WeightSpec

__version__ = "0.1.0"

__all__ = [
    "DomainSpec",
    "Field",
    "TransverseMode",
    "WeightKind",
    "WeightSpec",
    "LinearParams",
    "symbol",
    "propagate",
    "duhamel_apply",
    "picard_iterate",
    "g_h_eval",
    "g_h_prime",
    "SolverConfig",
    "SimulationState",
    "run",
    "step",
    "ZKError",
    "DomainError",
    "DataError",
    "UsageError",
    "ConfigError",
    "ConvergenceError",
    "InstabilityError",
]
