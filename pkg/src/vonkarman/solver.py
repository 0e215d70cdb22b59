"""Sparse direct solves, the biharmonic initial guess and the Newton loop."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import (
    PenaltyParams,
    assemble_a,
    assemble_load,
    assemble_newton_system,
    quadrature_points,
    residual,
)
from .space import FieldPair

LINEAR_RTOL = 1e-10
BACKWARD_TOL = 1e-13
REFINEMENT_STEPS = 3
FLOOR_MARGIN = 10.0


class SingularSystemError(ArithmeticError):
    """The linear system could not be factorized or solved to tolerance."""


def backward_error(A, x, b):
    """Normwise backward error ``|b - A x|_inf / (|A|_inf |x|_inf + |b|_inf)``."""
    r = b - A @ x
    anorm = abs(A).sum(axis=1).max()
    return float(np.abs(r).max() / (anorm * np.abs(x).max() + np.abs(b).max()))


def solve_linear(system, return_correction=False):
    """Solve ``system`` by sparse LU with a fill-reducing column ordering.

    One step of iterative refinement is always applied, and up to two more
    while the relative residual exceeds ``1e-10``. On fine meshes that
    target lies below the round-off floor ``|A| |x| eps / |b|``, so a
    solution whose normwise backward error is at round-off level
    (``<= 1e-13``) is accepted as well.

    With ``return_correction`` one more refinement correction is computed
    (without applying it) and returned; its size estimates the round-off
    error left in ``x``.
    """
    A = sp.csc_matrix(system.matrix)
    b = np.asarray(system.rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible system: matrix {A.shape}, rhs {b.shape}")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        z = np.zeros_like(b)
        return (z, z.copy()) if return_correction else z
    try:
        lu = splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(str(exc)) from exc
    x = lu.solve(b)
    r = b - A @ x
    for step in range(REFINEMENT_STEPS):
        if not np.all(np.isfinite(x)) or (step > 0 and np.linalg.norm(r) <= LINEAR_RTOL * bnorm):
            break
        x = x + lu.solve(r)
        r = b - A @ x
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("factorization produced non-finite values")
    rel = np.linalg.norm(r) / bnorm
    if rel > LINEAR_RTOL and backward_error(A, x, b) > BACKWARD_TOL:
        raise SingularSystemError(f"relative residual {rel:.3e} above {LINEAR_RTOL}")
    if return_correction:
        return x, lu.solve(r)
    return x


class Discretization:
    """Problem data assembled once per mesh: A, the load vectors and the norm Gram matrix."""

    def __init__(self, dofmap, params, problem):
        self.dofmap = dofmap
        self.params = params or PenaltyParams()
        self.problem = problem
        self.a_matrix = assemble_a(dofmap, self.params)
        self.norm_matrix = assemble_a(dofmap, self.params, consistency=False)
        x, _ = quadrature_points(dofmap.mesh)
        self.f_values, self.g_values = problem.loads(x[..., 0], x[..., 1])
        self.load_u = assemble_load(None, dofmap, values=self.f_values)
        self.load_v = assemble_load(None, dofmap, values=self.g_values)

    def pair_norm(self, psi):
        N = self.norm_matrix
        return float(np.sqrt(max(psi.u @ (N @ psi.u) + psi.v @ (N @ psi.v), 0.0)))

    def newton_system(self, psi_prev):
        return assemble_newton_system(psi_prev, self.dofmap, self.params,
                                      self.load_u, self.load_v, a_matrix=self.a_matrix)

    def residual(self, psi):
        return residual(psi, self.dofmap, self.params, self.load_u, self.load_v, a_matrix=self.a_matrix)


def initial_guess(disc):
    """Solution of the decoupled biharmonic part: A u0 = F, A v0 = G."""
    n = disc.dofmap.ndof
    system = disc.newton_system(FieldPair.zeros(n))
    return FieldPair.from_vector(solve_linear(system))


@dataclass
class NewtonReport:
    """Convergence history of one Newton solve.

    ``floors[j]`` estimates the round-off level of increment ``j`` from an
    extra iterative-refinement correction of the linear solve.
    """

    iterations: int = 0
    increments: list = field(default_factory=list)
    floors: list = field(default_factory=list)
    residual_norm: float = np.nan
    converged: bool = False
    solution_norm: float = np.nan

    def resolved_increments(self, margin=FLOOR_MARGIN):
        """Leading increments that stay above ``margin`` times their round-off floor."""
        out = []
        for e, f in zip(self.increments, self.floors or [0.0] * len(self.increments)):
            if e <= margin * f:
                break
            out.append(e)
        return np.array(out)

    def contraction_slope(self, margin=FLOOR_MARGIN):
        """Observed order of the final Newton iterations (about 2 when quadratic).

        With three or more resolved increments this is the least-squares slope
        of log e_{j+1} against log e_j. With two it is log e_1 / log e_0. With
        only one, the following round-off level increment bounds the true one
        from above, so log e_1 / log e_0 is a lower bound on the order. Ratios
        need e_0 < 1; otherwise, or without data, ``nan`` is returned.
        """
        e = self.resolved_increments(margin)
        if len(e) >= 3:
            return float(np.polyfit(np.log(e[:-1]), np.log(e[1:]), 1)[0])
        if len(e) == 1 and len(self.increments) > 1:
            e = np.array([e[0], self.increments[1]])
        if len(e) == 2 and 0.0 < e[0] < 1.0 and e[1] > 0.0:
            return float(np.log(e[1]) / np.log(e[0]))
        return np.nan

    def order_estimates(self, margin=FLOOR_MARGIN):
        """Local orders log(e_{j+1}/e_j) / log(e_j/e_{j-1}) over resolved increments."""
        e = self.resolved_increments(margin)
        return np.log(e[2:] / e[1:-1]) / np.log(e[1:-1] / e[:-2])


def newton_solve(disc, tol=1e-8, maxit=20, initial=None):
    """Newton iteration started from the biharmonic initial guess.

    Stops when the energy norm of the increment drops below ``tol`` or after
    ``maxit`` steps; non-convergence is reported, not raised.
    """
    if tol <= 0 or maxit < 1:
        raise ValueError("need tol > 0 and maxit >= 1")
    psi = initial_guess(disc) if initial is None else initial
    report = NewtonReport()
    for _ in range(maxit):
        x, corr = solve_linear(disc.newton_system(psi), return_correction=True)
        new = FieldPair.from_vector(x)
        inc = disc.pair_norm(new - psi)
        psi = new
        report.iterations += 1
        report.increments.append(inc)
        report.floors.append(disc.pair_norm(FieldPair.from_vector(corr)))
        if inc < tol:
            report.converged = True
            break
    report.residual_norm = float(np.linalg.norm(disc.residual(psi)))
    report.solution_norm = disc.pair_norm(psi)
    return psi, report
