"""Laboratório numérico para a equação de onda defocalizante exterior."""
__version__ = "0.1.0"

from .artifacts import ArtifactStore
from .core.errors import (
    CausalityError,
    CFLViolationError,
    ConfigError,
    CoverageError,
    DomainError,
    InconclusiveError,
    NumericalBlowupError,
    SolverError,
    UndefinedRatioError,
    WaveLabError,
)
from .core.models import EnergyReport, ExperimentConfig, ExperimentKind, Params, RadialGrid, RadialState, make_grid
from .experiments import ExperimentOutcome, ExperimentRunner
from .profiles import list_profiles
from .radial_solver import NonlinearitySpec, energy, evolve

__all__ = [
    "__version__",
    "ArtifactStore",
    "CausalityError",
    "CFLViolationError",
    "ConfigError",
    "CoverageError",
    "DomainError",
    "InconclusiveError",
    "NumericalBlowupError",
    "SolverError",
    "UndefinedRatioError",
    "WaveLabError",
    "EnergyReport",
    "ExperimentConfig",
    "ExperimentKind",
    "Params",
    "RadialGrid",
    "RadialState",
    "make_grid",
    "ExperimentOutcome",
    "ExperimentRunner",
    "list_profiles",
    "NonlinearitySpec",
    "energy",
    "evolve",
]
