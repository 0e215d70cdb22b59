import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracle import dense_estimator
from conftest import SMALL_MESHES
from vonkarman.adapt import level_zero_mesh
from vonkarman.estimator import (
    EstimatorReport,
    compute_estimator,
    dorfler_mark,
    oscillation,
    write_indicators,
)
from vonkarman.mesh import Mesh, uniform_refine
from vonkarman.problems import square_problem
from vonkarman.solver import Discretization, newton_solve
from vonkarman.space import DofMap, FieldPair


def f_poly(x, y):
    return 1.0 + x * y**2 - 2.0 * x**3


def g_poly(x, y):
    return x**2 - y


@pytest.mark.parametrize("name", sorted(SMALL_MESHES))
@pytest.mark.parametrize("mode", ["dg", "ip"])
def test_indicators_match_loop_oracle(name, mode):
    mesh = uniform_refine(SMALL_MESHES[name]())
    d = DofMap(mesh, mode)
    rng = np.random.default_rng(11)
    psi = FieldPair(rng.standard_normal(d.ndof), rng.standard_normal(d.ndof))
    rep = compute_estimator(psi, d, f=f_poly, g=g_poly)
    eta_K, eta_E = dense_estimator(mesh, d, psi.u, psi.v, f_poly, g_poly, mode)
    assert np.allclose(rep.eta_K_sq, eta_K, rtol=1e-11, atol=0)
    assert np.allclose(rep.eta_E_sq, eta_E, rtol=1e-11, atol=1e-13 * eta_E.max())
    assert rep.total_sq == pytest.approx(eta_K.sum() + eta_E.sum(), rel=1e-11)
    agg = eta_K + np.array([eta_E[mesh.tri_edges[t]].sum() for t in range(mesh.n_triangles)])
    assert np.allclose(rep.aggregate, agg, rtol=1e-11)


def test_square_level_two_matches_oracle_and_bounds_error():
    prob = square_problem()
    mesh = uniform_refine(uniform_refine(level_zero_mesh(prob)))
    d = DofMap(mesh, "dg")
    disc = Discretization(d, None, prob)
    psi, _ = newton_solve(disc)
    rep = compute_estimator(psi, d, f_values=disc.f_values, g_values=disc.g_values)
    eta_K, eta_E = dense_estimator(mesh, d, psi.u, psi.v, prob.f, prob.g, "dg")
    # the loads are not polynomial, so the two quadratures agree only to rule accuracy
    assert rep.total_sq == pytest.approx(eta_K.sum() + eta_E.sum(), rel=1e-8)
    assert np.all(np.isfinite(rep.aggregate)) and rep.total > 0


def test_trivial_cases():
    mesh = uniform_refine(SMALL_MESHES["lshape"]())
    d = DofMap(mesh, "dg")
    zero = FieldPair.zeros(d.ndof)
    rep = compute_estimator(zero, d)
    assert rep.total_sq == 0.0 and rep.osc_sq == 0.0
    rep = compute_estimator(zero, d, f=1.0)
    assert np.allclose(rep.eta_K_sq, mesh.diameters**4 * mesh.areas, rtol=1e-13)
    assert not rep.eta_E_sq.any()
    assert rep.osc_sq == pytest.approx(0.0, abs=1e-28)


@pytest.mark.parametrize("mode", ["dg", "ip"])
def test_scaling_of_the_indicators(mode):
    # with zero loads the edge terms are quadratic and the volume terms quartic in psi
    d = DofMap(uniform_refine(SMALL_MESHES["skewed"]()), mode)
    rng = np.random.default_rng(4)
    psi = FieldPair(rng.standard_normal(d.ndof), rng.standard_normal(d.ndof))
    a = compute_estimator(psi, d)
    b = compute_estimator(FieldPair(3 * psi.u, 3 * psi.v), d)
    assert np.allclose(b.eta_E_sq, 9 * a.eta_E_sq, rtol=1e-12)
    assert np.allclose(b.eta_K_sq, 81 * a.eta_K_sq, rtol=1e-12)
    assert np.all(a.eta_K_sq >= 0) and np.all(a.eta_E_sq >= 0)


def test_dorfler_examples():
    assert list(dorfler_mark(np.array([9.0, 4.0, 1.0]), 0.3)) == [0]
    assert len(dorfler_mark(np.ones(10), 0.3)) == 3
    assert len(dorfler_mark(np.arange(1.0, 8.0), 1 - 1e-9)) == 7
    # ties keep triangle order
    assert list(dorfler_mark(np.array([1.0, 2.0, 2.0, 2.0]), 0.4)) == [1, 2]
    rep = EstimatorReport(np.zeros(3), np.zeros(0), np.array([1.0, 5.0, 1.0]))
    assert list(dorfler_mark(rep, 0.5)) == [1]
    with pytest.raises(ValueError):
        dorfler_mark(np.ones(3), 1.0)
    with pytest.raises(ValueError):
        dorfler_mark(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        dorfler_mark(np.zeros(0), 0.3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 100.0), min_size=1, max_size=60).filter(lambda v: sum(v) > 0),
       st.floats(0.01, 0.99))
def test_dorfler_set_is_minimal(values, theta):
    eta = np.array(values)
    marked = dorfler_mark(eta, theta)
    total = eta.sum()
    s = eta[marked].sum()
    assert s >= theta * total * (1 - 1e-12)
    # removing the smallest marked indicator breaks the bulk criterion
    if len(marked) > 1:
        assert s - eta[marked].min() < theta * total
    # no smaller set can do better than the largest values
    k = len(marked)
    assert np.sort(eta)[::-1][: k - 1].sum() < theta * total * (1 - 1e-12) or k == 1


def test_oscillation_of_linear_load_on_one_triangle():
    tri = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))
    # int_K (x - 1/3)^2 = 1/36 and h_K^4 = 4
    assert oscillation(lambda x, y: x, tri) == pytest.approx(4.0 / 36.0, rel=1e-13)
    assert oscillation(2.5, tri) == pytest.approx(0.0, abs=1e-30)


def test_oscillation_decays_at_least_like_h_squared():
    f = lambda x, y: np.sin(3 * x) * np.cos(2 * y)
    m = uniform_refine(SMALL_MESHES["lshape"]())
    osc = []
    for _ in range(3):
        osc.append(np.sqrt(oscillation(f, m)))
        m = uniform_refine(m)
    slopes = np.log2(np.array(osc[:-1]) / np.array(osc[1:]))
    assert np.all(slopes >= 2.0)
    # smooth f: h_K^2 times an O(h) mean deviation over an O(1) area gives order 3
    assert slopes[-1] == pytest.approx(3.0, abs=0.1)


def test_indicator_csv():
    rep = EstimatorReport(np.array([1.0, 0.5]), np.array([0.25]), np.array([1.25, 0.75]))
    buf = io.StringIO()
    write_indicators(rep, buf)
    assert buf.getvalue() == "triangle_id,eta_K_sq,eta_agg_sq\n0,1,1.25\n1,0.5,0.75\n"
