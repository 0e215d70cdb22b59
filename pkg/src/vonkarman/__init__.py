"""Discontinuous Galerkin and C0 interior penalty solvers for the von Karman plate equations."""
from .adapt import AdaptiveTrace, LevelRecord, NewtonFailure, adaptive_run, solve_level, uniform_run
from .assembly import (
    PenaltyParams,
    SparseSystem,
    assemble_a,
    assemble_b_matrix,
    assemble_load,
    assemble_newton_system,
    b_form,
    residual,
)
from .estimator import EstimatorReport, compute_estimator, dorfler_mark, oscillation
from .mesh import Mesh, bisect, is_conforming, lshape_mesh, read_mesh, uniform_refine, unit_square_mesh, write_mesh
from .norms import dg_norm, error_dg_norm, rate
from .problems import Problem, alpha_root, constant_load_problem, lshape_problem, square_problem
from .quadrature import edge_rule, triangle_rule
from .solver import Discretization, NewtonReport, SingularSystemError, initial_guess, newton_solve, solve_linear
from .space import DofMap, FieldPair

__version__ = "0.1.0"
