import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from vonkarman.assembly import (
    PenaltyParams,
    assemble_a,
    assemble_b_matrix,
    assemble_load,
    assemble_newton_system,
    b_form,
    bracket,
    residual,
    write_system,
)
from vonkarman.mesh import uniform_refine, unit_square_mesh
from vonkarman.space import DofMap, FieldPair


def _rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


def _random_field(dofmap, seed):
    return np.random.default_rng(seed).standard_normal(dofmap.ndof)


def test_a_matches_loop_oracle(small_mesh, mode):
    d = DofMap(small_mesh, mode)
    sigma1 = 20.0 if mode == "dg" else 0.0
    A = assemble_a(d).toarray()
    ref = oracle.dense_a(small_mesh, d, sigma1, 20.0)
    assert _rel(A, ref) <= 1e-11


def test_norm_gram_matches_oracle_without_consistency(small_mesh):
    d = DofMap(small_mesh, "dg")
    N = assemble_a(d, PenaltyParams(sigma1=7.0, sigma2=3.0), consistency=False).toarray()
    ref = oracle.dense_a(small_mesh, d, 7.0, 3.0, consistency=False)
    assert _rel(N, ref) <= 1e-11


def test_b_matches_loop_oracle(small_mesh, mode):
    d = DofMap(small_mesh, mode)
    w, z = _random_field(d, 1), _random_field(d, 2)
    assert _rel(b_form(w, z, d), oracle.dense_b_vector(small_mesh, d, w, z)) <= 1e-11
    assert _rel(assemble_b_matrix(w, d).toarray(), oracle.dense_b_matrix(small_mesh, d, w)) <= 1e-11


def test_load_matches_loop_oracle(small_mesh, mode):
    d = DofMap(small_mesh, mode)
    # degree 8, so both rules integrate f * phi exactly
    f = lambda x, y: x**5 * y**3 - 2.0 * x**2 * y**4 + x * y + 0.5
    assert _rel(assemble_load(f, d), oracle.dense_load(small_mesh, d, f)) <= 1e-11


def test_residual_matches_loop_oracle(small_mesh, mode):
    d = DofMap(small_mesh, mode)
    A = assemble_a(d)
    u, v = _random_field(d, 3), _random_field(d, 4)
    F, G = _random_field(d, 5), _random_field(d, 6)
    got = residual(FieldPair(u, v), d, load_u=F, load_v=G, a_matrix=A)
    ref = oracle.dense_residual(small_mesh, d, A.toarray(), u, v, F, G)
    assert _rel(got, ref) <= 1e-11


@pytest.mark.parametrize("mesh_name", ["two", "skewed"])
def test_newton_matrix_is_residual_jacobian(mesh_name, mode):
    from conftest import SMALL_MESHES

    d = DofMap(SMALL_MESHES[mesh_name](), mode)
    A = assemble_a(d)
    rng = np.random.default_rng(7)
    F, G = rng.standard_normal(d.ndof), rng.standard_normal(d.ndof)
    psi = FieldPair(rng.standard_normal(d.ndof), rng.standard_normal(d.ndof))
    delta = rng.standard_normal(2 * d.ndof)
    J = assemble_newton_system(psi, d, load_u=F, load_v=G, a_matrix=A).matrix
    res = lambda x: residual(FieldPair.from_vector(x), d, load_u=F, load_v=G, a_matrix=A)
    step = 1e-5
    x0 = psi.vector
    fd = (res(x0 + step * delta) - res(x0 - step * delta)) / (2 * step)
    jd = J @ delta
    assert np.linalg.norm(jd - fd) <= 1e-6 * np.linalg.norm(fd)


def test_newton_step_is_linearization():
    # the Newton equation J x = rhs is R(psi) + J (x - psi) = 0
    d = DofMap(uniform_refine(unit_square_mesh()), "dg")
    A = assemble_a(d)
    rng = np.random.default_rng(11)
    F, G = rng.standard_normal(d.ndof), rng.standard_normal(d.ndof)
    psi = FieldPair(rng.standard_normal(d.ndof), rng.standard_normal(d.ndof))
    sys_ = assemble_newton_system(psi, d, load_u=F, load_v=G, a_matrix=A)
    x = psi.vector
    r = residual(psi, d, load_u=F, load_v=G, a_matrix=A)
    lhs = sys_.matrix @ x - sys_.rhs
    assert np.allclose(lhs, r, rtol=1e-10, atol=1e-10 * np.abs(r).max())


@pytest.mark.parametrize("refine", [0, 1])
def test_a_symmetric_positive_definite(mode, refine):
    from vonkarman.mesh import lshape_mesh

    for base in (unit_square_mesh(), lshape_mesh()):
        m = base
        for _ in range(refine):
            m = uniform_refine(m)
        A = assemble_a(DofMap(m, mode)).toarray()
        assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()
        assert np.linalg.eigvalsh(A).min() > 0.0


def test_constant_function_sees_only_boundary_penalty():
    m = unit_square_mesh()
    d = DofMap(m, "dg")
    one = np.ones(d.ndof)
    A = assemble_a(d)
    expected = 20.0 * np.sum(1.0 / m.edge_lengths[m.boundary] ** 2)
    assert one @ (A @ one) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(80.0)


def test_b_form_on_quadratics():
    m = unit_square_mesh()
    d = DofMap(m, "dg")
    x2 = d.interpolate(lambda x, y: x**2)
    y2 = d.interpolate(lambda x, y: y**2)
    xy = d.interpolate(lambda x, y: x * y)
    one = d.interpolate(lambda x, y: 1.0 + 0 * x)
    # b(x^2, y^2, 1) = -1/2 * [x^2, y^2] * |Omega| = -1/2 * 4
    assert b_form(x2, y2, d) @ one == pytest.approx(-2.0, abs=1e-13)
    assert b_form(xy, xy, d) @ one == pytest.approx(1.0, abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_bracket_is_symmetric_and_cofactor(h1, h2):
    a = np.array([[h1[0], h1[1]], [h1[1], h1[2]]])
    b = np.array([[h2[0], h2[1]], [h2[1], h2[2]]])
    cof = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])
    assert bracket(a, b) == pytest.approx(bracket(b, a), abs=1e-12)
    assert bracket(a, b) == pytest.approx(np.sum(cof * b), abs=1e-10)
    assert bracket(a, a) == pytest.approx(2.0 * np.linalg.det(a), abs=1e-9)


def test_loads_integrate_polynomials():
    d = DofMap(uniform_refine(unit_square_mesh()), "dg")
    one = np.ones(d.ndof)
    assert assemble_load(lambda x, y: x, d) @ one == pytest.approx(0.5, abs=1e-14)
    assert assemble_load(1.0, d) @ one == pytest.approx(1.0, abs=1e-14)


def test_penalty_validation():
    with pytest.raises(ValueError):
        PenaltyParams(sigma2=0.5)
    with pytest.raises(ValueError):
        PenaltyParams(sigma1=0.0)
    with pytest.warns(UserWarning):
        PenaltyParams(sigma1=5.0).jump_weight("ip")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert PenaltyParams().jump_weight("ip") == 0.0
        assert PenaltyParams().jump_weight("dg") == 20.0


def test_write_system_format(tmp_path):
    d = DofMap(unit_square_mesh(), "ip")
    sys_ = assemble_newton_system(FieldPair.zeros(d.ndof), d)
    path = tmp_path / "sys.txt"
    with open(path, "w") as fh:
        write_system(sys_, fh)
    rows = np.loadtxt(path)
    M = np.zeros(sys_.shape)
    M[rows[:, 0].astype(int), rows[:, 1].astype(int)] = rows[:, 2]
    assert np.array_equal(M, sys_.matrix.toarray())
