"""Benchmark problems for the von Karman plate system.

The manufactured problems prescribe exact (u, v) and derive the loads from

    f = bilaplacian(u) - [u, v],    g = bilaplacian(v) + [u, u] / 2,

so that bilaplacian(u) = [u, v] + f and bilaplacian(v) = -[u, u]/2 + g hold
exactly. Loads are obtained from the closed forms with fourth-order Taylor
arithmetic.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import taylor as tl
from .mesh import lshape_mesh, unit_square_mesh
from .taylor import TaylorScalar

LSHAPE_OMEGA = 1.5 * np.pi
CORNER_EXCLUSION = 1e-10


class NoExactSolution(LookupError):
    """Raised when asking for the exact solution of a problem that has none."""


def alpha_root(omega, tol=1e-15):
    """Smallest non-characteristic root in (0, 1) of sin^2(a w) = a^2 sin^2(w).

    The equation factors into sin(a w) = +a sin(w) and sin(a w) = -a sin(w);
    the trivial roots a = 0 and a = 1 are excluded. Each factor is scanned for
    a sign change and the bracket is bisected.
    """
    if not np.pi < omega <= 2.0 * np.pi:
        raise ValueError(f"omega must lie in (pi, 2 pi], got {omega}")
    grid = np.linspace(1e-6, 1.0 - 1e-6, 4001)
    roots = []
    for s in (1.0, -1.0):
        h = lambda a, s=s: np.sin(a * omega) - s * a * np.sin(omega)
        vals = h(grid)
        change = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
        if change.size == 0:
            continue
        lo, hi = grid[change[0]], grid[change[0] + 1]
        flo = h(lo)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            fm = h(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    if not roots:
        raise ValueError(f"no non-characteristic root in (0, 1) for omega={omega}")
    return min(roots)


def singular_angular(alpha, omega):
    """The angular profile g_{alpha, omega}(theta) of the corner singularity.

    Works on floats, numpy arrays and Taylor expansions alike.
    """
    am, ap = alpha - 1.0, alpha + 1.0
    c1 = np.sin(am * omega) / am - np.sin(ap * omega) / ap
    c2 = np.cos(am * omega) - np.cos(ap * omega)

    def g(theta):
        return (c1 * (tl.cos(am * theta) - tl.cos(ap * theta))
                - c2 * (tl.sin(am * theta) / am - tl.sin(ap * theta) / ap))

    return g


def lshape_angle(x, y):
    """Polar angle about the re-entrant corner, in [0, 3 pi / 2] on the L-shape."""
    return np.mod(np.arctan2(y, x), 2.0 * np.pi)


def _square_u(X, Y):
    return X**2 * Y**2 * (1.0 - X) ** 2 * (1.0 - Y) ** 2


def _square_v(X, Y):
    return tl.sin(np.pi * X) ** 2 * tl.sin(np.pi * Y) ** 2


def _lshape_recipe(alpha, omega):
    g = singular_angular(alpha, omega)

    def recipe(X, Y):
        x0, y0 = X.value, Y.value
        if np.any(x0**2 + y0**2 < CORNER_EXCLUSION**2):
            raise ValueError("L-shape solution is singular at the re-entrant corner")
        theta = tl.polar_angle(X, Y, lshape_angle(x0, y0))
        cutoff = (1.0 - X**2) ** 2 * (1.0 - Y**2) ** 2
        return cutoff * (X**2 + Y**2) ** (0.5 * (1.0 + alpha)) * g(theta)

    return recipe


@dataclass(frozen=True)
class Problem:
    """A plate problem: domain, loads and (optionally) the exact solution pair."""

    name: str
    domain: str
    alpha: float
    recipe_u: Optional[Callable] = None
    recipe_v: Optional[Callable] = None
    constant_f: Optional[float] = None
    constant_g: Optional[float] = None

    @property
    def has_exact(self):
        return self.recipe_u is not None

    def initial_mesh(self):
        return unit_square_mesh() if self.domain == "square" else lshape_mesh()

    def _expand(self, x, y, order):
        if not self.has_exact:
            raise NoExactSolution(f"problem {self.name!r} has no closed-form solution")
        X, Y = TaylorScalar.variables(x, y, order)
        u = self.recipe_u(X, Y)
        v = u if self.recipe_v is self.recipe_u else self.recipe_v(X, Y)
        return u, v

    def exact(self, x, y, order=2):
        """Taylor expansions ``(u, v)`` of the exact solution at points ``(x, y)``."""
        return self._expand(x, y, order)

    def loads(self, x, y):
        """Load pair ``(f, g)`` at points ``(x, y)``."""
        x = np.asarray(x, dtype=float)
        if not self.has_exact:
            shape = np.broadcast(x, y).shape
            return np.full(shape, float(self.constant_f or 0.0)), np.full(shape, float(self.constant_g or 0.0))
        u, v = self._expand(x, y, tl.ORDER)
        f = u.bilaplacian() - tl.bracket(u, v)
        g = v.bilaplacian() + 0.5 * tl.bracket(u, u)
        return f, g

    def f(self, x, y):
        return self.loads(x, y)[0]

    def g(self, x, y):
        return self.loads(x, y)[1]


def square_problem():
    """Smooth manufactured solution on the unit square (regularity index 1)."""
    return Problem("square", "square", 1.0, _square_u, _square_v)


def lshape_problem():
    """Corner-singular manufactured solution u = v on the L-shaped domain."""
    alpha = alpha_root(LSHAPE_OMEGA)
    recipe = _lshape_recipe(alpha, LSHAPE_OMEGA)
    return Problem("lshape", "lshape", alpha, recipe, recipe)


def constant_load_problem():
    """L-shaped domain with f = 1, g = 0 and unknown solution."""
    return Problem("lshape-f1", "lshape", alpha_root(LSHAPE_OMEGA), constant_f=1.0, constant_g=0.0)
