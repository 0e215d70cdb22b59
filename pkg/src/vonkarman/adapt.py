"""Level drivers: uniform refinement studies and the solve-estimate-mark-refine loop."""
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .estimator import compute_estimator, dorfler_mark
from .mesh import bisect, uniform_refine
from .norms import error_dg_norm, rate
from .solver import Discretization, newton_solve
from .space import DofMap


class NewtonFailure(ArithmeticError):
    """Newton did not converge on some level of a run."""

    def __init__(self, level, report):
        super().__init__(f"Newton did not converge on level {level} after {report.iterations} iterations")
        self.level = level
        self.report = report


@dataclass
class LevelRecord:
    """Everything recorded for one mesh of a run."""

    level: int
    ndof: int
    n_triangles: int
    eta: float
    osc: float
    newton: object
    err_u: Optional[float] = None
    err_v: Optional[float] = None
    marked: int = 0
    seconds: float = 0.0

    @property
    def newton_iterations(self):
        return self.newton.iterations

    @property
    def error(self):
        """Energy error of the pair, ``None`` without an exact solution."""
        if self.err_u is None:
            return None
        return float(np.hypot(self.err_u, self.err_v))

    @property
    def efficiency(self):
        e = self.error
        return None if e is None or self.eta == 0 else e / self.eta


@dataclass
class LevelSolution:
    """Discrete state of the latest level, kept for output."""

    dofmap: DofMap
    discretization: Discretization
    psi: object
    estimator: object


@dataclass
class AdaptiveTrace:
    """Per-level records of a run, plus the state of its final level."""

    records: list = field(default_factory=list)
    final: Optional[LevelSolution] = None

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def ndofs(self):
        return self.column("ndof")

    @property
    def etas(self):
        return self.column("eta")

    def rates(self, name):
        """Empirical rates of column ``name`` (nan on the first level)."""
        vals = self.column(name)
        if len(vals) < 2:
            return np.full(len(vals), np.nan)
        return rate(vals, self.ndofs)

    def slope(self, name="eta", last=5):
        """Least-squares slope of log(column) against log(ndof) over the last levels."""
        n = min(last, len(self.records))
        x = np.log(self.ndofs[-n:])
        y = np.log(self.column(name)[-n:])
        return float(np.polyfit(x, y, 1)[0])


def level_zero_mesh(problem):
    """Coarsest mesh of every study: one red refinement of the problem's initial mesh."""
    return uniform_refine(problem.initial_mesh())


def solve_level(problem, mesh, mode, params=None, tol=1e-8, level=0):
    """Newton solve, estimator and (when available) exact errors on one mesh."""
    t0 = time.perf_counter()
    dofmap = DofMap(mesh, mode)
    disc = Discretization(dofmap, params, problem)
    psi, report = newton_solve(disc, tol=tol)
    if not report.converged:
        raise NewtonFailure(level, report)
    est = compute_estimator(psi, dofmap, f_values=disc.f_values, g_values=disc.g_values)
    rec = LevelRecord(level, dofmap.ndof, mesh.n_triangles, est.total, float(np.sqrt(est.osc_sq)), report)
    if problem.has_exact:
        rec.err_u = error_dg_norm(lambda x, y: problem.exact(x, y)[0], psi.u, dofmap, disc.params)
        rec.err_v = error_dg_norm(lambda x, y: problem.exact(x, y)[1], psi.v, dofmap, disc.params)
    rec.seconds = time.perf_counter() - t0
    return rec, LevelSolution(dofmap, disc, psi, est)


def uniform_run(problem, mode, params=None, levels=4, tol=1e-8, mesh=None, callback=None):
    """Solve on ``levels`` successive red refinements, starting from ``mesh``."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    mesh = level_zero_mesh(problem) if mesh is None else mesh
    trace = AdaptiveTrace()
    for level in range(levels):
        rec, sol = solve_level(problem, mesh, mode, params, tol, level)
        trace.records.append(rec)
        trace.final = sol
        if callback:
            callback(rec)
        if level + 1 < levels:
            mesh = uniform_refine(mesh)
    return trace


def adaptive_run(problem, mode, params=None, theta=0.3, max_levels=None, max_ndof=None,
                 tol=1e-8, mesh=None, callback=None):
    """Solve, estimate, mark (Dorfler) and bisect until a level or size limit.

    The run stops after ``max_levels`` levels, or before solving a mesh whose
    ndof would exceed ``max_ndof``; the last recorded level is always solved.
    Every level restarts Newton from the biharmonic initial guess.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if max_levels is None and max_ndof is None:
        raise ValueError("give max_levels, max_ndof or both")
    if max_levels is not None and max_levels < 1:
        raise ValueError("max_levels must be >= 1")
    mesh = level_zero_mesh(problem) if mesh is None else mesh
    if max_ndof is not None and DofMap(mesh, mode).ndof > max_ndof:
        raise ValueError(f"max_ndof={max_ndof} is below the size of the initial mesh")
    trace = AdaptiveTrace()
    level = 0
    while True:
        rec, sol = solve_level(problem, mesh, mode, params, tol, level)
        trace.records.append(rec)
        trace.final = sol
        if max_levels is not None and level + 1 >= max_levels:
            break
        marked = dorfler_mark(sol.estimator, theta)
        rec.marked = len(marked)
        refined = bisect(mesh, marked)
        if max_ndof is not None and DofMap(refined, mode).ndof > max_ndof:
            break
        if callback:
            callback(rec)
        mesh = refined
        level += 1
    if callback:
        callback(trace.records[-1])
    return trace
