"""Two-phase Stefan problem with non-local grey radiation in the solid.

Green's-function fixed-point solver, front-fixing finite-difference
cross-check, Neumann similarity oracle and maximum-principle validators.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .barriers import BarrierSpec, construct_barrier, validate_solution
from .fdsolver import FDConfig, neumann_similarity_oracle, solve_fd
from .fixedpoint import FixedPointConfig, compute_admissible_tstar, solve, solve_local
from .initial_data import ExponentialProfile, NeumannProfile, TableProfile
from .nondim import NondimParams, PhysicalParams, nondimensionalize
from .solution import Solution

__all__ = [
    "BACKEND", "BarrierSpec", "construct_barrier", "validate_solution", "FDConfig",
    "neumann_similarity_oracle", "solve_fd", "FixedPointConfig", "compute_admissible_tstar",
    "solve", "solve_local", "ExponentialProfile", "NeumannProfile", "TableProfile",
    "NondimParams", "PhysicalParams", "nondimensionalize", "Solution",
]
