"""Residual a posteriori error indicators, data oscillation and Dorfler marking."""
from dataclasses import dataclass

import numpy as np

from .assembly import bracket, edge_traces, evaluate_data, quadrature_points


@dataclass
class EstimatorReport:
    """Squared indicators of one discrete solution.

    Attributes
    ----------
    eta_K_sq : (T,) volume indicators.
    eta_E_sq : (E,) edge indicators.
    aggregate : (T,) ``eta_K^2`` plus the indicators of the three edges of K.
    osc_sq : squared data oscillation of ``f``.
    """

    eta_K_sq: np.ndarray
    eta_E_sq: np.ndarray
    aggregate: np.ndarray
    osc_sq: float = 0.0

    @property
    def total_sq(self):
        """Global squared estimator; every edge is counted once."""
        return float(self.eta_K_sq.sum() + self.eta_E_sq.sum())

    @property
    def total(self):
        return float(np.sqrt(self.total_sq))


def _data_values(data, values, x):
    return evaluate_data(data, x) if values is None else np.asarray(values, dtype=float)


def volume_indicators(psi, dofmap, f_values, g_values):
    """``h_K^4 (|f + [u, v]|^2 + |[u, u] - 2 g|^2)`` integrated over each K."""
    mesh = dofmap.mesh
    _, w = quadrature_points(mesh)
    hu = dofmap.cell_hessians(psi.u)
    hv = dofmap.cell_hessians(psi.v)
    r1 = f_values + bracket(hu, hv)[:, None]
    r2 = bracket(hu, hu)[:, None] - 2.0 * g_values
    return mesh.diameters**4 * np.sum(w * (r1**2 + r2**2), axis=1)


def _edge_cells(tr, mesh):
    sides = (0, 1) if tr.interior else (0,)
    return mesh.edge_tris[tr.edge_ids][:, sides]


def edge_indicators(psi, dofmap):
    """Hessian-jump (interior edges), value-jump (dG only) and gradient-jump terms per edge."""
    mesh = dofmap.mesh
    out = np.zeros(mesh.n_edges)
    for tr in edge_traces(dofmap):
        if not len(tr.edge_ids):
            continue
        cells = _edge_cells(tr, mesh)
        total = np.zeros(len(tr.edge_ids))
        for coeffs in (psi.u, psi.v):
            c = dofmap.local_coefficients(coeffs)[cells].reshape(len(tr.edge_ids), -1)
            jg = np.einsum("el,elqa->eqa", c, tr.jump_grad)
            total += np.sum(tr.ds * np.sum(jg**2, axis=-1), axis=1) / tr.h
            if dofmap.mode == "dg":
                jv = np.einsum("el,elq->eq", c, tr.jump)
                total += np.sum(tr.ds * jv**2, axis=1) / tr.h**3
            if tr.interior:
                # Hessians are constant, so the normal-trace jump is constant on E
                jh = np.einsum("el,ela->ea", c, tr.jump_hess_n)
                total += tr.h**2 * np.sum(jh**2, axis=1)
        out[tr.edge_ids] = total
    return out


def oscillation(f, mesh, values=None):
    """Squared oscillation ``sum_K h_K^4 |f - mean_K f|^2`` with the degree-10 rule."""
    x, w = quadrature_points(mesh)
    fx = _data_values(f, values, x)
    mean = np.sum(w * fx, axis=1) / np.sum(w, axis=1)
    return float(np.sum(mesh.diameters**4 * np.sum(w * (fx - mean[:, None]) ** 2, axis=1)))


def compute_estimator(psi, dofmap, f=None, g=None, f_values=None, g_values=None):
    """Volume and edge indicators of ``psi`` for loads ``f`` and ``g``.

    Loads are callables, constants or ``None`` (zero); precomputed values at
    the degree-10 points may be passed instead.
    """
    mesh = dofmap.mesh
    x, _ = quadrature_points(mesh)
    fv = _data_values(f, f_values, x)
    gv = _data_values(g, g_values, x)
    eta_K = volume_indicators(psi, dofmap, fv, gv)
    eta_E = edge_indicators(psi, dofmap)
    aggregate = eta_K + eta_E[mesh.tri_edges].sum(axis=1)
    return EstimatorReport(eta_K, eta_E, aggregate, oscillation(None, mesh, values=fv))


def dorfler_mark(indicators, theta=0.3, rtol=1e-12):
    """Shortest prefix of triangles, by decreasing indicator, holding a ``theta`` share.

    ``indicators`` is an :class:`EstimatorReport` (its aggregates are used) or
    an array of squared indicators. Ties keep triangle order. Returns sorted ids.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    eta = indicators.aggregate if isinstance(indicators, EstimatorReport) else indicators
    eta = np.asarray(eta, dtype=float)
    if eta.size == 0:
        raise ValueError("cannot mark from an empty set of indicators")
    order = np.argsort(-eta, kind="stable")
    csum = np.cumsum(eta[order])
    target = theta * csum[-1]
    # the relative slack absorbs round-off such as 0.3 * 10 > 3
    k = int(np.searchsorted(csum, target * (1.0 - rtol), side="left")) + 1
    return np.sort(order[:min(k, eta.size)])


def write_indicators(report, fh):
    """CSV dump ``triangle_id,eta_K_sq,eta_agg_sq``."""
    fh.write("triangle_id,eta_K_sq,eta_agg_sq\n")
    for t, (a, b) in enumerate(zip(report.eta_K_sq, report.aggregate)):
        fh.write(f"{t},{a:.10g},{b:.10g}\n")
