"""Quadratic Lagrange spaces: broken P2 (dG) and continuous P2 with zero trace (C0-IP).

Local dof order on a triangle is the three vertices followed by the three
edge midpoints, midpoint ``3 + i`` sitting on the edge opposite vertex ``i``.
"""
from dataclasses import dataclass

import numpy as np

# reference gradients of the barycentric coordinates (1 - x - y, x, y)
_GRAD_LAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_OTHERS = ((1, 2), (2, 0), (0, 1))

REFERENCE_NODES = np.array(
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.0, 0.5], [0.5, 0.0]]
)


def _barycentric(xi):
    xi = np.asarray(xi, dtype=float)
    return np.stack([1.0 - xi[..., 0] - xi[..., 1], xi[..., 0], xi[..., 1]], axis=-1)


class ReferenceBasis:
    """The six P2 shape functions on the reference triangle."""

    nodes = REFERENCE_NODES

    @staticmethod
    def values(xi):
        """Shape function values, shape (..., 6)."""
        lam = _barycentric(xi)
        out = [lam[..., i] * (2.0 * lam[..., i] - 1.0) for i in range(3)]
        out += [4.0 * lam[..., j] * lam[..., k] for j, k in _OTHERS]
        return np.stack(out, axis=-1)

    @staticmethod
    def gradients(xi):
        """Reference gradients, shape (..., 6, 2)."""
        lam = _barycentric(xi)[..., None]
        g = _GRAD_LAMBDA
        out = [(4.0 * lam[..., i, :] - 1.0) * g[i] for i in range(3)]
        out += [4.0 * (lam[..., k, :] * g[j] + lam[..., j, :] * g[k]) for j, k in _OTHERS]
        return np.stack(out, axis=-2)

    @staticmethod
    def hessians():
        """Reference Hessians (constant), shape (6, 2, 2)."""
        g = _GRAD_LAMBDA
        out = [4.0 * np.outer(g[i], g[i]) for i in range(3)]
        out += [4.0 * (np.outer(g[j], g[k]) + np.outer(g[k], g[j])) for j, k in _OTHERS]
        return np.array(out)


def physical_gradients(mesh, tri, ref_grads):
    """Push reference gradients (..., 6, 2) forward on triangles ``tri``: B^-T grad."""
    binv = mesh.inverse_jacobians[tri]
    return np.einsum("...ba,...kb->...ka", binv, ref_grads)


def physical_hessians(mesh, tri=None):
    """Constant physical Hessians of the basis, shape (T, 6, 2, 2): B^-T H B^-1."""
    binv = mesh.inverse_jacobians if tri is None else mesh.inverse_jacobians[tri]
    h = ReferenceBasis.hessians()
    return np.einsum("...ba,kbc,...cd->...kad", binv, h, binv)


def to_reference(mesh, tri, x):
    """Reference coordinates of physical points ``x`` (..., 2) in triangles ``tri``."""
    p0 = mesh.vertices[mesh.triangles[tri, 0]]
    return np.einsum("...ij,...j->...i", mesh.inverse_jacobians[tri], x - p0)


class DofMap:
    """Local-to-global numbering of a P2 space on ``mesh``.

    ``mode="dg"``: broken P2, six private dofs per triangle.
    ``mode="ip"``: continuous P2 numbered over vertices then edges; nodes on
    the boundary are constrained to zero and carry index -1 in ``cell_dofs``.
    """

    def __init__(self, mesh, mode="dg"):
        if mode not in ("dg", "ip"):
            raise ValueError(f"unknown space mode {mode!r}; expected 'dg' or 'ip'")
        self.mesh = mesh
        self.mode = mode
        nt = mesh.n_triangles
        if mode == "dg":
            self.cell_dofs = np.arange(6 * nt, dtype=np.int64).reshape(nt, 6)
            self.ndof = 6 * nt
            self.constrained = np.zeros(0, dtype=np.int64)
        else:
            nodes = np.hstack([mesh.triangles, mesh.n_vertices + mesh.tri_edges])
            on_bnd = np.concatenate([mesh.boundary_vertices, mesh.boundary])
            free = np.flatnonzero(~on_bnd)
            number = np.full(len(on_bnd), -1, dtype=np.int64)
            number[free] = np.arange(len(free))
            self.cell_dofs = number[nodes]
            self.ndof = len(free)
            self.constrained = np.flatnonzero(on_bnd)
        self.cell_dofs.setflags(write=False)

    def __repr__(self):
        return f"DofMap(mode={self.mode!r}, ndof={self.ndof}, triangles={self.mesh.n_triangles})"

    def local_coefficients(self, coeffs):
        """Per-triangle coefficients (T, 6); constrained nodes read as zero."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.ndof,):
            raise ValueError(f"coefficient vector has shape {coeffs.shape}, expected ({self.ndof},)")
        cd = self.cell_dofs
        if self.mode == "dg":
            return coeffs[cd]
        return np.where(cd >= 0, coeffs[np.maximum(cd, 0)], 0.0)

    def node_coordinates(self):
        """Physical coordinates of every local node, shape (T, 6, 2)."""
        m = self.mesh
        p = m.vertices[m.triangles]
        mids = 0.5 * (p[:, [1, 2, 0]] + p[:, [2, 0, 1]])
        return np.concatenate([p, mids], axis=1)

    def interpolate(self, f):
        """Nodal interpolant of ``f(x, y)`` (vectorized); zero on constrained nodes."""
        xy = self.node_coordinates()
        vals = np.asarray(f(xy[..., 0], xy[..., 1]), dtype=float) * np.ones(xy.shape[:2])
        out = np.zeros(self.ndof)
        cd = self.cell_dofs
        ok = cd >= 0
        out[cd[ok]] = vals[ok]
        return out

    def eval(self, coeffs, tri, xi):
        """Value, gradient and Hessian of a field at reference point(s) ``xi`` of ``tri``.

        ``tri`` and ``xi[..., :]`` broadcast together. Raises ``IndexError`` for
        an invalid triangle id.
        """
        tri = np.asarray(tri)
        if np.any((tri < 0) | (tri >= self.mesh.n_triangles)):
            raise IndexError("triangle id out of range")
        xi = np.asarray(xi, dtype=float)
        loc = self.local_coefficients(coeffs)[tri]
        phi = ReferenceBasis.values(xi)
        grad = physical_gradients(self.mesh, tri, ReferenceBasis.gradients(xi))
        hess = physical_hessians(self.mesh, tri)
        value = np.einsum("...k,...k->...", loc, phi)
        gradient = np.einsum("...k,...ka->...a", loc, grad)
        hessian = np.einsum("...k,...kab->...ab", loc, hess)
        return value, gradient, hessian

    def cell_hessians(self, coeffs):
        """Constant Hessian of the field on every triangle, shape (T, 2, 2)."""
        return np.einsum("tk,tkab->tab", self.local_coefficients(coeffs), physical_hessians(self.mesh))

    def values_at(self, coeffs, xi):
        """Field values at reference points ``xi`` (q, 2) on all triangles, shape (T, q)."""
        return self.local_coefficients(coeffs) @ ReferenceBasis.values(xi).T


@dataclass
class FieldPair:
    """Coefficient vectors of the discrete plate deflection u and Airy stress v."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must have the same length")

    @classmethod
    def zeros(cls, ndof):
        return cls(np.zeros(ndof), np.zeros(ndof))

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        n = len(x) // 2
        return cls(x[:n].copy(), x[n:].copy())

    @property
    def vector(self):
        return np.concatenate([self.u, self.v])

    def __sub__(self, other):
        return FieldPair(self.u - other.u, self.v - other.v)
