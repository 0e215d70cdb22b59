"""Conforming triangulations with red refinement and newest vertex bisection.

Local numbering convention: local edge ``i`` of a triangle ``(v0, v1, v2)`` is
the edge opposite vertex ``i``, i.e. ``(v[i+1], v[i+2])`` cyclically. Each
triangle carries ``refedge``, the local index of its refinement edge for
newest vertex bisection (NVB), and a ``generation`` counter (area of a triangle
is ``area_of_ancestor / 2**generation``).

Global edges are oriented by their adjacent triangles: ``edge_tris[e] =
(K+, K-)`` with ``K+ < K-`` (``K- = -1`` on the boundary) and the unit normal
``edge_normals[e]`` points from ``K+`` into ``K-`` (outward on the boundary).
Jumps are ``phi|K+ - phi|K-``.

Initial meshes
--------------
``unit_square_mesh`` is the criss-cross split of (0,1)^2 into four triangles
meeting at the centre (5 vertices). ``lshape_mesh`` splits each of the three
unit squares of the L-shape by the diagonal through the re-entrant corner
(0, 0), giving six triangles. Refinement edges start on the longest edge.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

_LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


def _signed_areas(vertices, triangles):
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _edge_lengths_local(vertices, triangles):
    p = vertices[triangles]
    return np.stack(
        [np.linalg.norm(p[:, (i + 2) % 3] - p[:, (i + 1) % 3], axis=1) for i in range(3)],
        axis=1,
    )


class Frame(NamedTuple):
    """Orientation frame of an edge: (K+, K-, unit normal from K+ to K-)."""

    plus: int
    minus: int
    normal: np.ndarray

    @property
    def is_boundary(self):
        return self.minus < 0


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable conforming triangulation.

    Parameters
    ----------
    vertices : (N, 2) float array
    triangles : (T, 3) int array, positively oriented
    refedge : (T,) int array, optional
        Local index of the NVB refinement edge; defaults to the longest edge.
    generation : (T,) int array, optional
    """

    vertices: np.ndarray
    triangles: np.ndarray
    refedge: np.ndarray = None
    generation: np.ndarray = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must have shape (N, 2)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must have shape (T, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle vertex index out of range")
        if np.any(_signed_areas(v, t) <= 0.0):
            raise ValueError("triangles must be positively oriented and non-degenerate")
        if self.refedge is None:
            r = np.argmax(_edge_lengths_local(v, t), axis=1)
        else:
            r = np.asarray(self.refedge, dtype=np.int64)
        if r.shape != (len(t),) or np.any((r < 0) | (r > 2)):
            raise ValueError("refedge must hold one local edge index in {0,1,2} per triangle")
        g = np.zeros(len(t), dtype=np.int64) if self.generation is None else np.asarray(self.generation, dtype=np.int64)
        for name, arr in (("vertices", v), ("triangles", t), ("refedge", r), ("generation", g)):
            arr = arr.copy() if arr is getattr(self, name) else arr
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._build_edges()

    def _build_edges(self):
        t = self.triangles
        nt = len(t)
        loc = np.sort(t[:, _LOCAL_EDGES], axis=2).reshape(-1, 2)
        edges, inv, counts = np.unique(loc, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        if counts.size and counts.max() > 2:
            raise ValueError("non-manifold mesh: an edge is shared by more than two triangles")
        order = np.argsort(inv, kind="stable")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        first = order[starts]
        edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
        edge_local = np.full((len(edges), 2), -1, dtype=np.int64)
        edge_tris[:, 0] = first // 3
        edge_local[:, 0] = first % 3
        two = counts == 2
        second = order[starts[two] + 1]
        edge_tris[two, 1] = second // 3
        edge_local[two, 1] = second % 3

        p = self.vertices
        a = p[edges[:, 0]]
        b = p[edges[:, 1]]
        d = b - a
        lengths = np.linalg.norm(d, axis=1)
        n = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
        # orient outward from K+
        opp = p[t[edge_tris[:, 0], edge_local[:, 0]]]
        flip = np.einsum("ij,ij->i", opp - a, n) > 0
        n[flip] *= -1.0

        for name, arr in (
            ("edges", edges),
            ("tri_edges", inv.reshape(nt, 3)),
            ("edge_tris", edge_tris),
            ("edge_local", edge_local),
            ("edge_normals", n),
            ("edge_lengths", lengths),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def boundary(self):
        """Boolean flag per edge."""
        return self.edge_tris[:, 1] < 0

    @cached_property
    def areas(self):
        return _signed_areas(self.vertices, self.triangles)

    @cached_property
    def diameters(self):
        """Triangle diameters h_K (longest edge)."""
        return self.edge_lengths[self.tri_edges].max(axis=1)

    @cached_property
    def jacobians(self):
        """Affine maps x = p0 + B xi; returns B with shape (T, 2, 2)."""
        p = self.vertices[self.triangles]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)

    @cached_property
    def inverse_jacobians(self):
        return np.linalg.inv(self.jacobians)

    @cached_property
    def boundary_vertices(self):
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[self.edges[self.boundary].ravel()] = True
        return flags

    def to_physical(self, tri, xi):
        """Map reference points ``xi`` (..., 2) on triangles ``tri`` to physical space."""
        tri = np.asarray(tri)
        p0 = self.vertices[self.triangles[tri, 0]]
        return p0 + np.einsum("...ij,...j->...i", self.jacobians[tri], xi)

    def frame(self, edge):
        """Jump/average frame of one edge; see :func:`jump_average_frames`."""
        return jump_average_frames(self, edge)

    def min_angle(self):
        """Smallest interior angle over all triangles (radians)."""
        p = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            w = p[:, (i + 2) % 3] - p[:, i]
            c = np.einsum("ij,ij->i", u, w) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
            angles.append(np.arccos(np.clip(c, -1.0, 1.0)))
        return float(np.min(angles))

    def shape_constant(self):
        """min over K and E in E(K) of h_E / h_K."""
        return float(np.min(self.edge_lengths[self.tri_edges] / self.diameters[:, None]))


def jump_average_frames(mesh, edge):
    """Return ``(K+, K-, normal)`` of ``edge``; ``K- = -1`` for boundary edges.

    On a boundary edge the jump and the average of a function are both its trace.
    """
    edge = int(edge)
    if not 0 <= edge < mesh.n_edges:
        raise IndexError(f"edge {edge} out of range")
    kp, km = mesh.edge_tris[edge]
    return Frame(int(kp), int(km), mesh.edge_normals[edge].copy())


def unit_square_mesh():
    """Criss-cross triangulation of (0, 1)^2 with four triangles."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
    triangles = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    return Mesh(vertices, triangles)


def lshape_mesh():
    """Six-triangle mesh of (-1, 1)^2 minus [0, 1) x (-1, 0]."""
    vertices = np.array(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
         [-1.0, 1.0], [-1.0, 0.0], [-1.0, -1.0], [0.0, -1.0]]
    )
    triangles = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 6], [0, 6, 7]])
    return Mesh(vertices, triangles)


def uniform_refine(mesh):
    """Red refinement: split every triangle into four congruent children.

    Children keep the parent's local refinement-edge index (each child is a
    scaled, possibly point-reflected, copy of its parent).
    """
    nv = mesh.n_vertices
    t = mesh.triangles
    mids = nv + mesh.tri_edges
    v0, v1, v2 = t.T
    m0, m1, m2 = mids.T
    children = np.stack(
        [
            np.column_stack([v0, m2, m1]),
            np.column_stack([m2, v1, m0]),
            np.column_stack([m1, m0, v2]),
            np.column_stack([m0, m1, m2]),
        ],
        axis=1,
    ).reshape(-1, 3)
    e = mesh.edges
    vertices = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])])
    return Mesh(
        vertices,
        children,
        refedge=np.repeat(mesh.refedge, 4),
        generation=np.repeat(mesh.generation + 2, 4),
    )


def _rotate_to_refedge(mesh):
    """Rotate local numbering so the refinement edge is local edge 0."""
    idx = (np.arange(3)[None, :] + mesh.refedge[:, None]) % 3
    tri = np.take_along_axis(mesh.triangles, idx, axis=1)
    te = np.take_along_axis(mesh.tri_edges, idx, axis=1)
    return tri, te


def bisect(mesh, marked):
    """Newest vertex bisection of ``marked`` triangles plus conforming closure.

    Every marked triangle is bisected across its refinement edge; further
    triangles are bisected until no hanging node remains. A bisected triangle
    ``(a, b, c)`` with refinement edge ``(b, c)`` and midpoint ``m`` gives the
    children ``(m, a, b)`` and ``(m, c, a)``; ``m`` is their newest vertex and
    their refinement edges are the edges opposite ``m``.
    """
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked, dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.n_triangles:
        raise IndexError("marked triangle id out of range")

    tri, te = _rotate_to_refedge(mesh)
    cut = np.zeros(mesh.n_edges, dtype=bool)
    cut[te[marked, 0]] = True
    # each sweep cuts at least one more edge, so this bound is never reached
    # unless the reference-edge state is corrupt
    max_sweeps = mesh.n_edges + 1
    for _ in range(max_sweeps):
        need = cut[te].any(axis=1) & ~cut[te[:, 0]]
        if not need.any():
            break
        cut[te[need, 0]] = True
    else:
        raise RuntimeError("NVB closure did not terminate; refinement-edge state is corrupt")

    nv = mesh.n_vertices
    cut_ids = np.flatnonzero(cut)
    mid = np.full(mesh.n_edges, -1, dtype=np.int64)
    mid[cut_ids] = nv + np.arange(len(cut_ids))
    e = mesh.edges[cut_ids]
    vertices = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])])

    a, b, c = tri.T
    gen = mesh.generation
    split = cut[te[:, 0]]
    cut_ab = cut[te[:, 2]] & split
    cut_ca = cut[te[:, 1]] & split
    m = mid[te[:, 0]]
    m_ab = mid[te[:, 2]]
    m_ca = mid[te[:, 1]]

    parts = []  # (parent, slot, triangle rows, generation)
    keep = ~split
    parts.append((np.flatnonzero(keep), 0, tri[keep], gen[keep]))
    # child (m, a, b)
    s = split & ~cut_ab
    parts.append((np.flatnonzero(s), 0, np.column_stack([m[s], a[s], b[s]]), gen[s] + 1))
    s = cut_ab
    parts.append((np.flatnonzero(s), 0, np.column_stack([m_ab[s], m[s], a[s]]), gen[s] + 2))
    parts.append((np.flatnonzero(s), 1, np.column_stack([m_ab[s], b[s], m[s]]), gen[s] + 2))
    # child (m, c, a)
    s = split & ~cut_ca
    parts.append((np.flatnonzero(s), 2, np.column_stack([m[s], c[s], a[s]]), gen[s] + 1))
    s = cut_ca
    parts.append((np.flatnonzero(s), 2, np.column_stack([m_ca[s], m[s], c[s]]), gen[s] + 2))
    parts.append((np.flatnonzero(s), 3, np.column_stack([m_ca[s], a[s], m[s]]), gen[s] + 2))

    parent = np.concatenate([p[0] for p in parts])
    slot = np.concatenate([np.full(len(p[0]), p[1]) for p in parts])
    rows = np.vstack([p[2].reshape(-1, 3) for p in parts])
    gens = np.concatenate([p[3] for p in parts])
    order = np.lexsort((slot, parent))
    return Mesh(vertices, rows[order], refedge=np.zeros(len(rows), dtype=np.int64), generation=gens[order])


def is_conforming(mesh, tol=1e-12):
    """True if no vertex lies strictly inside a boundary-flagged edge.

    A hanging node shows up as a vertex in the interior of an edge that has only
    one adjacent triangle, so this is a complete conformity audit together with
    the edge-sharing check done at construction.
    """
    e = mesh.edges[mesh.boundary]
    a = mesh.vertices[e[:, 0]]
    d = mesh.vertices[e[:, 1]] - a
    L2 = np.einsum("ij,ij->i", d, d)
    for start in range(0, mesh.n_vertices, 2048):
        p = mesh.vertices[start:start + 2048]
        w = p[None, :, :] - a[:, None, :]
        s = np.einsum("eij,ej->ei", w, d) / L2[:, None]
        cross = w[..., 0] * d[:, None, 1] - w[..., 1] * d[:, None, 0]
        inside = (s > tol) & (s < 1 - tol) & (np.abs(cross) <= tol * L2[:, None])
        if inside.any():
            return False
    return True


def write_mesh(mesh, fh):
    """Write the plain-text mesh format (VERTICES / TRIANGLES / BOUNDARY sections)."""
    fh.write(f"VERTICES {mesh.n_vertices}\n")
    for i, (x, y) in enumerate(mesh.vertices):
        fh.write(f"{i} {x:.17g} {y:.17g}\n")
    fh.write(f"TRIANGLES {mesh.n_triangles}\n")
    for i, (a, b, c) in enumerate(mesh.triangles):
        fh.write(f"{i} {a} {b} {c}\n")
    bnd = mesh.edges[mesh.boundary]
    fh.write(f"BOUNDARY {len(bnd)}\n")
    for a, b in bnd:
        fh.write(f"{a} {b}\n")


def read_mesh(fh):
    """Read the format written by :func:`write_mesh`."""
    vertices, triangles = [], []
    section = None
    for line in fh:
        parts = line.split()
        if not parts:
            continue
        if parts[0] in ("VERTICES", "TRIANGLES", "BOUNDARY"):
            section = parts[0]
            continue
        if section == "VERTICES":
            vertices.append((float(parts[1]), float(parts[2])))
        elif section == "TRIANGLES":
            triangles.append(tuple(int(p) for p in parts[1:4]))
    return Mesh(np.array(vertices), np.array(triangles, dtype=np.int64))
