"""Mesh-dependent energy norms, exact-solution errors and empirical rates."""
import numpy as np

from .assembly import PenaltyParams, assemble_a, edge_traces, quadrature_points


def dg_norm(coeffs, dofmap, params=None):
    """Energy norm: broken H2 seminorm plus weighted jump penalties over all edges."""
    N = assemble_a(dofmap, params or PenaltyParams(), consistency=False)
    return float(np.sqrt(max(coeffs @ (N @ coeffs), 0.0)))


def _boundary_exact_traces(exact_at, tr):
    """Exact value and gradient on boundary-edge quadrature points."""
    t = exact_at(tr.points[..., 0], tr.points[..., 1])
    return t.value, t.gradient()


def error_dg_norm(exact_at, coeffs, dofmap, params=None, boundary_atol=1e-10):
    """Energy norm of ``exact - field`` for one scalar component.

    ``exact_at(x, y)`` returns a Taylor expansion of order >= 2. Interior jumps
    of the smooth exact solution vanish; on boundary edges its traces are used
    and checked to vanish (clamped conditions) within ``boundary_atol``.
    """
    params = params or PenaltyParams()
    mesh = dofmap.mesh
    sigma1 = params.jump_weight(dofmap.mode)
    sigma2 = params.sigma2

    x, w = quadrature_points(mesh)
    h_exact = exact_at(x[..., 0], x[..., 1]).hessian()
    h_field = dofmap.cell_hessians(coeffs)
    diff = h_exact - h_field[:, None]
    total = float(np.sum(w * np.einsum("tqab,tqab->tq", diff, diff)))

    loc = dofmap.local_coefficients(coeffs)
    for tr in edge_traces(dofmap):
        if not len(tr.edge_ids):
            continue
        c = loc[_edge_cells(tr, mesh)].reshape(len(tr.edge_ids), -1)
        jv = -np.einsum("el,elq->eq", c, tr.jump)
        jn = -np.einsum("el,elq->eq", c, tr.jump_dn)
        if not tr.interior:
            val, grad = _boundary_exact_traces(exact_at, tr)
            if np.max(np.abs(val), initial=0.0) > boundary_atol or np.max(np.abs(grad), initial=0.0) > boundary_atol:
                raise ValueError("exact solution does not satisfy clamped boundary conditions")
            jv = jv + val
            jn = jn + np.einsum("eqa,ea->eq", grad, tr.normals)
        total += float(np.sum(tr.ds * jn**2 * (sigma2 / tr.h)[:, None]))
        if sigma1:
            total += float(np.sum(tr.ds * jv**2 * (sigma1 / tr.h**3)[:, None]))
    return float(np.sqrt(total))


def _edge_cells(tr, mesh):
    """Triangles supplying the local functions of each edge, shape (E, sides)."""
    sides = (0, 1) if tr.interior else (0,)
    return mesh.edge_tris[tr.edge_ids][:, sides]


def rate(errors, ndofs):
    """Empirical rates 2 log(e_{l-1}/e_l) / log(ndof_l / ndof_{l-1}); first entry is nan."""
    e = np.asarray(errors, dtype=float)
    n = np.asarray(ndofs, dtype=float)
    if e.shape != n.shape or e.ndim != 1 or len(e) < 2:
        raise ValueError("errors and ndofs must be 1-d sequences of equal length >= 2")
    if np.any(e <= 0) or np.any(n <= 0):
        raise ValueError("errors and ndofs must be positive")
    out = np.full(len(e), np.nan)
    out[1:] = 2.0 * np.log(e[:-1] / e[1:]) / np.log(n[1:] / n[:-1])
    return out
