"""Weighted Diophantine approximation toolkit.

Quasinorms and grids, the diagonal flow on grids, best approximation
sequences, the modified Bugeaud-Laurent index map, weighted transference
and box-counting experiments, with exact rational arithmetic wherever a
decision is made.
"""

__version__ = "0.1.0"

from .errors import (
    BadgridError,
    BudgetError,
    DimensionError,
    InsufficientDataError,
    PrecisionError,
    PreconditionError,
    RationalPairError,
    ScopeError,
)
from .weights import ExactMatrix, TargetVector, Weights, parse_problem
from .quasinorm import QuasinormValue, grid_vector_quasinorm, idist, rs_matrix_quasinorm, weighted_quasinorm
from .grid import FlowElement, Grid, apply_flow, escape_fraction, grid_min, height, in_L_epsilon, lift_point, orbit_scan
from .diophantine import badness_scan, dani_consistency, is_rational_pair, zeta
from .best_approx import (
    best_approx_sequence,
    dirichlet_check,
    doubling_index,
    no_solution_scales,
    sequence_for,
    soa_statistic,
    soa_verdict,
)
from .bl_sequence import build_phi, verify_phi
from .transference import (
    IntegerLattice,
    Parallelepiped,
    dual_lattice,
    lattice_point_in,
    minkowski_transfer_check,
    pseudo_compound,
    transfer_solution,
)
from .dimension import (
    bad_A_boxcount,
    bad_alpha_membership,
    bad_b_boxcount,
    inclusion_check,
    weighted_boxcount,
)
