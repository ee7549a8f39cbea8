"""Certificates computed from completed trajectories."""

from .entropy import (
    EntropyEntry,
    EntropyReport,
    cell_entropy_defects,
    discrete_entropy_residual,
    entropy_fluxes,
    entropy_residual,
    entropy_sweep,
    k_grid_values,
)
from .functionals import (
    Violation,
    balance_defects,
    discrete_l2h1_functional,
    l1_space_time,
    locate_violations,
    mass_drift,
    relative_mass_drift,
    space_time_difference,
    weak_bv_functional,
)
from .refinement import (
    BoundaryLayerReport,
    ConvergenceTable,
    boundary_layer_probe,
    cell_parents,
    level_difference,
    oscillation_proxy,
    refinement_study,
    solve_ladder,
)
from .testfunctions import TestFunction, bump_family

__all__ = [
    "BoundaryLayerReport", "ConvergenceTable", "EntropyEntry", "EntropyReport", "TestFunction",
    "Violation", "balance_defects", "boundary_layer_probe", "bump_family", "cell_entropy_defects",
    "cell_parents", "discrete_entropy_residual", "discrete_l2h1_functional", "entropy_fluxes",
    "entropy_residual", "entropy_sweep", "k_grid_values", "l1_space_time", "level_difference",
    "locate_violations", "mass_drift", "oscillation_proxy", "refinement_study",
    "relative_mass_drift", "solve_ladder", "space_time_difference", "weak_bv_functional",
]
