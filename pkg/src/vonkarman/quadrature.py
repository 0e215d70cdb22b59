"""Quadrature rules on the reference triangle and the unit interval.

Triangle rules are collapsed (conical product) Gauss rules: a Gauss-Jacobi
rule in the collapsed direction times a Gauss-Legendre rule along the
collapsed fibres. They have positive weights, strictly interior nodes and
are exact for total degree ``2n - 1`` with ``n**2`` points.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_TRIANGLE_DEGREE = 14
MAX_EDGE_POINTS = 10


@dataclass(frozen=True)
class QuadRule:
    """A fixed quadrature rule.

    For triangle rules ``points`` has shape ``(n, 3)`` and holds barycentric
    coordinates ``(1 - x - y, x, y)`` on the reference triangle
    ``(0,0), (1,0), (0,1)``. For edge rules ``points`` has shape ``(n,)`` and
    holds parameters in ``[0, 1]``.
    """

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def xy(self):
        """Reference (x, y) coordinates of a triangle rule, shape (n, 2)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Rule on the reference triangle exact for total degree <= ``degree``."""
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(f"unsupported triangle rule degree {degree!r} (1..{MAX_TRIANGLE_DEGREE})")
    n = (int(degree) + 2) // 2
    a, wa = roots_jacobi(n, 1.0, 0.0)
    b, wb = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (1.0 + a)
    t = 0.5 * (1.0 + b)
    x = s[:, None] * np.ones(n)[None, :]
    y = (1.0 - s)[:, None] * t[None, :]
    # Jacobian (1 - s) = (1 - a)/2 is carried by the Jacobi weight
    w = wa[:, None] * wb[None, :] / 8.0
    x, y, w = x.ravel(), y.ravel(), w.ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(pts, w, 2 * n - 1)


@lru_cache(maxsize=None)
def edge_rule(npts):
    """Gauss-Legendre rule on [0, 1] with ``npts`` points (exact degree 2*npts - 1)."""
    if not isinstance(npts, (int, np.integer)) or not 1 <= npts <= MAX_EDGE_POINTS:
        raise ValueError(f"unsupported edge rule size {npts!r} (1..{MAX_EDGE_POINTS})")
    x, w = np.polynomial.legendre.leggauss(int(npts))
    t = 0.5 * (x + 1.0)
    w = 0.5 * w
    t.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(t, w, 2 * int(npts) - 1)


# degrees used throughout the package
ASSEMBLY_DEGREE = 4
DATA_DEGREE = 10
EDGE_POINTS = 5
