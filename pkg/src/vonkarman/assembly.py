"""Sparse assembly of the penalized plate forms and the Newton block system.

All edge sums run over interior and boundary edges. On a boundary edge the
jump and the average of a function are its trace, which imposes the clamped
conditions weakly.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import ASSEMBLY_DEGREE, DATA_DEGREE, EDGE_POINTS, edge_rule, triangle_rule
from .space import ReferenceBasis, physical_gradients, physical_hessians, to_reference

DEFAULT_SIGMA = 20.0


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty weights: ``sigma1`` on function jumps (dG only), ``sigma2`` on normal-derivative jumps.

    ``sigma1=None`` means the default 20 in dG mode and "not given" in IP mode.
    """

    sigma1: float = None
    sigma2: float = DEFAULT_SIGMA

    def __post_init__(self):
        if self.sigma2 < 1.0:
            raise ValueError(f"sigma2 must be >= 1, got {self.sigma2}")
        if self.sigma1 is not None and self.sigma1 <= 0.0:
            raise ValueError(f"sigma1 must be > 0, got {self.sigma1}")

    def jump_weight(self, mode):
        """The sigma1 actually used for ``mode``."""
        if mode == "ip":
            if self.sigma1 is not None:
                warnings.warn("sigma1 has no effect in C0-IP mode and is ignored", stacklevel=3)
            return 0.0
        return DEFAULT_SIGMA if self.sigma1 is None else float(self.sigma1)


@dataclass
class SparseSystem:
    """Block system over (u-dofs, v-dofs)."""

    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape


class EdgeTraces:
    """Jumps and averages of all basis functions on one group of edges.

    Local function index ``l`` runs over the six functions of ``K+`` and, for
    interior edges, the six functions of ``K-``.
    """

    def __init__(self, dofmap, edge_ids, interior):
        mesh = dofmap.mesh
        rule = edge_rule(EDGE_POINTS)
        self.edge_ids = edge_ids
        self.interior = interior
        self.h = mesh.edge_lengths[edge_ids]
        self.normals = mesh.edge_normals[edge_ids]
        e = mesh.edges[edge_ids]
        a = mesh.vertices[e[:, 0]]
        b = mesh.vertices[e[:, 1]]
        self.points = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
        self.ds = rule.weights[None, :] * self.h[:, None]

        sides = (0, 1) if interior else (0,)
        vals, grads, hn, dofs = [], [], [], []
        for s in sides:
            tri = mesh.edge_tris[edge_ids, s]
            xi = to_reference(mesh, tri[:, None], self.points)
            vals.append(ReferenceBasis.values(xi).transpose(0, 2, 1))
            grads.append(physical_gradients(mesh, tri[:, None], ReferenceBasis.gradients(xi)).transpose(0, 2, 1, 3))
            hn.append(np.einsum("ekab,eb->eka", physical_hessians(mesh, tri), self.normals))
            dofs.append(dofmap.cell_dofs[tri])
        if interior:
            sign = np.concatenate([np.ones(6), -np.ones(6)])
            avg = 0.5
        else:
            sign = np.ones(6)
            avg = 1.0
        self.dofs = np.concatenate(dofs, axis=1)
        self.jump = np.concatenate(vals, axis=1) * sign[None, :, None]
        self.jump_grad = np.concatenate(grads, axis=1) * sign[None, :, None, None]
        self.jump_dn = np.einsum("elqa,ea->elq", self.jump_grad, self.normals)
        self.avg_hess_n = avg * np.concatenate(hn, axis=1)
        self.jump_hess_n = np.concatenate(hn, axis=1) * sign[None, :, None]


def edge_traces(dofmap):
    """(interior, boundary) :class:`EdgeTraces`, cached on the dofmap."""
    cache = dofmap.__dict__.setdefault("_cache", {})
    if "traces" not in cache:
        mesh = dofmap.mesh
        inner = np.flatnonzero(~mesh.boundary)
        outer = np.flatnonzero(mesh.boundary)
        cache["traces"] = (EdgeTraces(dofmap, inner, True), EdgeTraces(dofmap, outer, False))
    return cache["traces"]


def _to_csr(dofs_r, dofs_c, vals, n):
    rows = np.broadcast_to(dofs_r[:, :, None], vals.shape)
    cols = np.broadcast_to(dofs_c[:, None, :], vals.shape)
    ok = (rows >= 0) & (cols >= 0)
    m = sp.coo_matrix((vals[ok], (rows[ok], cols[ok])), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


def _scatter(dofs, vals, n):
    ok = dofs >= 0
    return np.bincount(dofs[ok], weights=vals[ok], minlength=n)


def _edge_blocks(tr, sigma1, sigma2, consistency):
    w = tr.ds
    out = np.einsum("eiq,ejq,eq->eij", tr.jump_dn, tr.jump_dn, w) * (sigma2 / tr.h)[:, None, None]
    if sigma1:
        out += np.einsum("eiq,ejq,eq->eij", tr.jump, tr.jump, w) * (sigma1 / tr.h**3)[:, None, None]
    if consistency:
        # C[i, j] = J(phi_j, phi_i) = int [grad phi_i] . <D2 phi_j nu>
        c = np.einsum("eiqa,eq,eja->eij", tr.jump_grad, w, tr.avg_hess_n)
        out -= c + c.transpose(0, 2, 1)
    return out


def assemble_a(dofmap, params=None, consistency=True):
    """Matrix of the penalized bilinear form, ``M[i, j] = a(phi_j, phi_i)``.

    With ``consistency=False`` the two symmetrizing edge terms are dropped,
    which yields the Gram matrix of the mesh-dependent energy norm.
    """
    params = params or PenaltyParams()
    mesh = dofmap.mesh
    sigma1 = params.jump_weight(dofmap.mode)
    sigma2 = params.sigma2
    n = dofmap.ndof

    hess = physical_hessians(mesh)
    vol = np.einsum("tiab,tjab->tij", hess, hess) * mesh.areas[:, None, None]
    mats = [_to_csr(dofmap.cell_dofs, dofmap.cell_dofs, vol, n)]
    for tr in edge_traces(dofmap):
        if len(tr.edge_ids):
            blocks = _edge_blocks(tr, sigma1, sigma2, consistency)
            mats.append(_to_csr(tr.dofs, tr.dofs, blocks, n))
    out = mats[0]
    for m in mats[1:]:
        out = out + m
    return out.tocsr()


def bracket(h1, h2):
    """Von Karman bracket cof(h1) : h2 of Hessians (..., 2, 2)."""
    return (h1[..., 0, 0] * h2[..., 1, 1] + h1[..., 1, 1] * h2[..., 0, 0]
            - h1[..., 0, 1] * h2[..., 1, 0] - h1[..., 1, 0] * h2[..., 0, 1])


def _basis_integrals(mesh):
    rule = triangle_rule(ASSEMBLY_DEGREE)
    ref = ReferenceBasis.values(rule.xy).T @ rule.weights  # (6,), reference area 1/2
    return 2.0 * mesh.areas[:, None] * ref[None, :]


def assemble_b_matrix(w, dofmap):
    """``B(w)[i, j] = b(w, phi_j, phi_i) = -1/2 sum_K int_K [w, phi_j] phi_i``."""
    mesh = dofmap.mesh
    wh = dofmap.cell_hessians(w)
    br = bracket(wh[:, None], physical_hessians(mesh))  # (T, 6), constant per triangle
    vals = -0.5 * _basis_integrals(mesh)[:, :, None] * br[:, None, :]
    return _to_csr(dofmap.cell_dofs, dofmap.cell_dofs, vals, dofmap.ndof)


def b_form(w, z, dofmap):
    """Vector ``b(w, z, phi_i)`` over all test dofs."""
    mesh = dofmap.mesh
    br = bracket(dofmap.cell_hessians(w), dofmap.cell_hessians(z))
    vals = -0.5 * _basis_integrals(mesh) * br[:, None]
    return _scatter(dofmap.cell_dofs, vals, dofmap.ndof)


def quadrature_points(mesh, degree=DATA_DEGREE):
    """Physical points (T, q, 2) and weights (T, q) of the triangle rule on every cell."""
    rule = triangle_rule(degree)
    x = mesh.to_physical(np.arange(mesh.n_triangles)[:, None], rule.xy[None, :, :])
    w = 2.0 * mesh.areas[:, None] * rule.weights[None, :]
    return x, w


def evaluate_data(f, x):
    """Evaluate a scalar data function at points ``x`` (..., 2); constants broadcast."""
    if f is None:
        return np.zeros(x.shape[:-1])
    if np.isscalar(f):
        return np.full(x.shape[:-1], float(f))
    return np.broadcast_to(np.asarray(f(x[..., 0], x[..., 1]), dtype=float), x.shape[:-1])


def assemble_load(f, dofmap, values=None):
    """Load vector ``sum_K int_K f phi_i`` with the degree-10 rule.

    ``values`` may supply precomputed data values at the rule's points.
    """
    mesh = dofmap.mesh
    rule = triangle_rule(DATA_DEGREE)
    x, w = quadrature_points(mesh)
    fx = evaluate_data(f, x) if values is None else values
    phi = ReferenceBasis.values(rule.xy)  # (q, 6)
    loc = np.einsum("tq,qk->tk", fx * w, phi)
    return _scatter(dofmap.cell_dofs, loc, dofmap.ndof)


def assemble_newton_system(psi_prev, dofmap, params=None, load_u=None, load_v=None, a_matrix=None):
    """Linear system for the next Newton iterate.

    ``[[A + 2 B(v), 2 B(u)], [-2 B(u), A]] [u; v] = [2 b(u, v, .) + F; -b(u, u, .) + G]``
    where ``(u, v) = psi_prev`` and ``F``, ``G`` are the assembled load vectors.
    """
    A = assemble_a(dofmap, params) if a_matrix is None else a_matrix
    n = dofmap.ndof
    F = np.zeros(n) if load_u is None else load_u
    G = np.zeros(n) if load_v is None else load_v
    u, v = psi_prev.u, psi_prev.v
    Bu = assemble_b_matrix(u, dofmap)
    Bv = assemble_b_matrix(v, dofmap)
    mat = sp.bmat([[A + 2.0 * Bv, 2.0 * Bu], [-2.0 * Bu, A]], format="csr")
    rhs = np.concatenate([2.0 * b_form(u, v, dofmap) + F, -b_form(u, u, dofmap) + G])
    return SparseSystem(mat, rhs)


def residual(psi, dofmap, params=None, load_u=None, load_v=None, a_matrix=None):
    """Discrete residual ``N_h(psi; phi_i)`` for all test functions, u-block then v-block."""
    A = assemble_a(dofmap, params) if a_matrix is None else a_matrix
    n = dofmap.ndof
    F = np.zeros(n) if load_u is None else load_u
    G = np.zeros(n) if load_v is None else load_v
    u, v = psi.u, psi.v
    ru = A @ u + 2.0 * b_form(u, v, dofmap) - F
    rv = A @ v - b_form(u, u, dofmap) - G
    return np.concatenate([ru, rv])


def write_system(system, fh):
    """Write the matrix in coordinate text format, one ``row col value`` per line."""
    m = system.matrix.tocoo()
    order = np.lexsort((m.col, m.row))
    for r, c, x in zip(m.row[order], m.col[order], m.data[order]):
        fh.write(f"{r} {c} {x:.17g}\n")
