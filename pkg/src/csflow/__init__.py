"""Radial solver for the planar gauged Schrodinger equation with a
self-consistent Chern-Simons term.

The package computes positive ground states and sign-changing radial
solutions, certifies them by variational identities (Nehari, dilation),
and packages the headline comparisons (energy doubling, large
coefficient asymptotics, multi-bump multiplicity) as reproducible
experiments behind a small CLI.
"""

from .experiments import (
    DEFAULT_SCHEDULE,
    AsymptoticsReport,
    ContinuationReport,
    DoublingReport,
    MultiplicityReport,
    asymptotics_experiment,
    continuation,
    doubling_experiment,
    multiplicity_sweep,
)
from .flow import (
    ConeStatus,
    FlowError,
    FlowOptions,
    Solution,
    classify,
    descend,
    solve_ground,
    solve_nodal,
)
from .functionals import ProblemParams, Residuals, energy, gradient
from .grid import RadialGrid, make_grid
from .operator_t import OperatorError, apply_T

__all__ = [
    "AsymptoticsReport",
    "ConeStatus",
    "DEFAULT_SCHEDULE",
    "ContinuationReport",
    "DoublingReport",
    "FlowError",
    "FlowOptions",
    "MultiplicityReport",
    "OperatorError",
    "ProblemParams",
    "RadialGrid",
    "Residuals",
    "Solution",
    "apply_T",
    "asymptotics_experiment",
    "classify",
    "continuation",
    "descend",
    "doubling_experiment",
    "energy",
    "gradient",
    "make_grid",
    "multiplicity_sweep",
    "solve_ground",
    "solve_nodal",
]

__version__ = "0.1.0"
