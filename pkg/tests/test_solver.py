import numpy as np
import pytest
import scipy.sparse as sp

from vonkarman.adapt import level_zero_mesh
from vonkarman.assembly import SparseSystem
from vonkarman.mesh import uniform_refine
from vonkarman.problems import Problem, lshape_problem, square_problem
from vonkarman.solver import (
    Discretization,
    NewtonReport,
    SingularSystemError,
    backward_error,
    initial_guess,
    newton_solve,
    solve_linear,
)
from vonkarman.space import DofMap, FieldPair


def _disc(problem, mode, refinements=0):
    m = level_zero_mesh(problem)
    for _ in range(refinements):
        m = uniform_refine(m)
    return Discretization(DofMap(m, mode), None, problem)


def test_identity_system():
    b = np.arange(1.0, 6.0)
    x = solve_linear(SparseSystem(sp.identity(5, format="csr"), b))
    assert np.array_equal(x, b)
    x, corr = solve_linear(SparseSystem(sp.identity(5, format="csr"), np.zeros(5)), return_correction=True)
    assert not x.any() and not corr.any()


def test_singular_system_raises():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [0.0, 0.0]]))
    with pytest.raises(SingularSystemError):
        solve_linear(SparseSystem(A, np.array([1.0, 1.0])))
    with pytest.raises(ValueError):
        solve_linear(SparseSystem(sp.identity(3, format="csr"), np.ones(2)))


@pytest.mark.parametrize("mode", ["dg", "ip"])
def test_level_one_newton_system_meets_residual_target(mode):
    disc = _disc(square_problem(), mode, refinements=1)
    psi = initial_guess(disc)
    system = disc.newton_system(psi)
    x = solve_linear(system)
    r = system.rhs - system.matrix @ x
    assert np.linalg.norm(r) <= 1e-10 * np.linalg.norm(system.rhs)
    assert backward_error(system.matrix, x, system.rhs) <= 1e-15


def test_initial_guess_solves_decoupled_biharmonic():
    disc = _disc(lshape_problem(), "dg")
    psi = initial_guess(disc)
    A = disc.a_matrix
    assert np.linalg.norm(A @ psi.u - disc.load_u) <= 1e-10 * np.linalg.norm(disc.load_u)
    assert np.linalg.norm(A @ psi.v - disc.load_v) <= 1e-10 * np.linalg.norm(disc.load_v)
    flat = Problem("f1-square", "square", 1.0, constant_f=1.0, constant_g=0.0)
    assert not initial_guess(_disc(flat, "ip")).v.any()


def test_zero_load_converges_in_one_step():
    zero = Problem("zero", "square", 1.0, constant_f=0.0, constant_g=0.0)
    psi, rep = newton_solve(_disc(zero, "dg"))
    assert rep.iterations == 1 and rep.converged
    assert not psi.vector.any()


@pytest.mark.parametrize("mode", ["dg", "ip"])
def test_newton_on_square_converges_quadratically(mode):
    disc = _disc(square_problem(), mode, refinements=2)
    psi, rep = newton_solve(disc, tol=1e-8)
    assert rep.converged and rep.iterations <= 5
    load = np.linalg.norm(np.concatenate([disc.load_u, disc.load_v]))
    assert rep.residual_norm <= 1e-8 * load
    assert rep.contraction_slope() >= 1.7


@pytest.mark.parametrize("mode", ["dg", "ip"])
@pytest.mark.parametrize("problem", [square_problem, lshape_problem])
def test_extra_iterations_leave_coefficients_unchanged(problem, mode):
    disc = _disc(problem(), mode, refinements=2)
    psi, _ = newton_solve(disc, tol=1e-8)
    psi2, rep2 = newton_solve(disc, tol=1e-8, initial=psi)
    assert rep2.iterations == 1
    assert np.abs(psi2.vector - psi.vector).max() < 1e-12


def test_newton_increments_decrease():
    disc = _disc(lshape_problem(), "ip")
    psi, rep = newton_solve(disc, tol=1e-12, maxit=8)
    assert rep.converged
    assert np.all(np.diff(rep.increments[:3]) < 0)


def test_newton_rejects_bad_arguments():
    disc = _disc(square_problem(), "dg")
    with pytest.raises(ValueError):
        newton_solve(disc, tol=0.0)
    with pytest.raises(ValueError):
        newton_solve(disc, maxit=0)


def test_contraction_slope_cases():
    quad = NewtonReport(increments=[1e-1, 1e-2, 1e-4, 1e-8], floors=[0.0] * 4)
    assert quad.contraction_slope() == pytest.approx(2.0, abs=1e-12)
    two = NewtonReport(increments=[1e-3, 1e-6], floors=[1e-18, 1e-18])
    assert two.contraction_slope() == pytest.approx(2.0)
    # second increment at its floor: the ratio uses it as an upper bound
    one = NewtonReport(increments=[3e-5, 1e-15], floors=[1e-17, 1e-15])
    assert one.contraction_slope() == pytest.approx(np.log(1e-15) / np.log(3e-5))
    assert np.isnan(NewtonReport(increments=[2.0, 1.0], floors=[0.0, 0.0]).contraction_slope())
    assert np.isnan(NewtonReport().contraction_slope())
    assert np.allclose(quad.order_estimates(), [2.0, 2.0])


def test_field_pair_arithmetic_in_newton_norm():
    disc = _disc(square_problem(), "dg")
    n = disc.dofmap.ndof
    rng = np.random.default_rng(1)
    a = FieldPair(rng.standard_normal(n), rng.standard_normal(n))
    assert disc.pair_norm(a - a) == 0.0
    assert disc.pair_norm(FieldPair(2 * a.u, 2 * a.v)) == pytest.approx(2 * disc.pair_norm(a))
