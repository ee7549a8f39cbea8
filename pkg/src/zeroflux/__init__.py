"""Finite volume solver for u_t + div f(u) - lap phi(u) = 0 with zero-flux boundaries."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    ExpressionError,
    InvalidDataError,
    InvalidMeshError,
    InvalidModelError,
    MeshSizeError,
    ParameterError,
    ZeroFluxError,
)
from .mesh import Mesh, build_interval_mesh, build_rectangle_mesh, interval_mesh_from_nodes
from .model import Model, builtin_model, builtin_models, validate
from .numflux import NumericalFlux, make_flux
from .scheme import (
    DiscreteSolution,
    SolverConfig,
    cfl_limit,
    discrete_gradient,
    explicit_step,
    implicit_step,
    init_cell_averages,
    reconstruct,
    run_evolution,
)
from .stationary import (
    StationaryProblem,
    crandall_liggett_march,
    resolvent_contraction_probe,
    stationary_solve,
)

__all__ = [
    "ConfigError", "ConvergenceError", "DiscreteSolution", "DomainError", "ExpressionError",
    "InvalidDataError", "InvalidMeshError", "InvalidModelError", "Mesh", "MeshSizeError", "Model",
    "NumericalFlux", "ParameterError", "SolverConfig", "StationaryProblem", "ZeroFluxError",
    "build_interval_mesh", "build_rectangle_mesh", "builtin_model", "builtin_models", "cfl_limit",
    "crandall_liggett_march", "discrete_gradient", "explicit_step", "implicit_step",
    "init_cell_averages", "interval_mesh_from_nodes", "make_flux", "reconstruct",
    "resolvent_contraction_probe", "run_evolution", "stationary_solve", "validate",
]
