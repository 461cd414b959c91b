"""Half-range boundary value problems for forward-backward kinetic equations.

Solves ``psi' = -J L psi + f`` on a slab ``[0, tau]`` or the half-line with
``P+ psi(0)`` and ``P- psi(tau)`` prescribed, through the spectral
decomposition of ``B = J L`` in the Krein space defined by ``J``.
"""
from ._backend import BACKEND
from .abstract_kinetic import TModel, build_spaces, reduce, solve_kinetic
from .discretize import DiscreteModel, Grid, assemble_operators, build_grid, random_jpositive_instance
from .duhamel import ForcingFunction, particular_solutions, solve_nonhomogeneous, solve_nonhomogeneous_halfspace
from .halfrange import BoundaryData, build_G, build_R, solve, solve_boundary_system, solve_halfspace
from .krein import KreinDecomposition, decompose, spectral_projection
from .oracle import brute_force_bvp, direct_block_solve
from .problem_def import CoefficientSet, check_admissibility, fokker_planck, power_with_r, signum_power

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundaryData",
    "CoefficientSet",
    "DiscreteModel",
    "ForcingFunction",
    "Grid",
    "KreinDecomposition",
    "TModel",
    "assemble_operators",
    "brute_force_bvp",
    "build_G",
    "build_R",
    "build_grid",
    "build_spaces",
    "check_admissibility",
    "decompose",
    "direct_block_solve",
    "fokker_planck",
    "particular_solutions",
    "power_with_r",
    "random_jpositive_instance",
    "reduce",
    "signum_power",
    "solve",
    "solve_boundary_system",
    "solve_halfspace",
    "solve_kinetic",
    "solve_nonhomogeneous",
    "solve_nonhomogeneous_halfspace",
    "spectral_projection",
]
