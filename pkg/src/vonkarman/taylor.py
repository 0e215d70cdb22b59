"""Truncated bivariate Taylor arithmetic (forward-mode differentiation to order 4).

A :class:`TaylorScalar` holds the coefficients ``c[i, j]`` of

    f(x0 + dx, y0 + dy) = sum_{i + j <= N} c[i, j] dx**i dy**j + O(|d|**(N+1))

for a whole array of expansion points at once. Partial derivatives are
``d^(i+j) f / dx^i dy^j = i! j! c[i, j]``.
"""
from functools import lru_cache
from math import comb, factorial

import numpy as np

ORDER = 4


@lru_cache(maxsize=None)
def _monomials(order):
    return tuple((i, k - i) for k in range(order + 1) for i in range(k, -1, -1))


@lru_cache(maxsize=None)
def _index(order):
    return {m: n for n, m in enumerate(_monomials(order))}


@lru_cache(maxsize=None)
def _product_table(order):
    mons = _monomials(order)
    idx = _index(order)
    table = [[] for _ in mons]
    for p, (i, j) in enumerate(mons):
        for q, (k, l) in enumerate(mons):
            if i + j + k + l <= order:
                table[idx[(i + k, j + l)]].append((p, q))
    return tuple(tuple(t) for t in table)


class TaylorScalar:
    """Truncated Taylor expansion of a scalar field at an array of points."""

    __array_ufunc__ = None

    def __init__(self, coeffs, order=ORDER):
        self.order = order
        self.c = coeffs  # shape (n_monomials, *point_shape)

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, shape=(), order=ORDER):
        c = np.zeros((len(_monomials(order)),) + tuple(shape))
        c[0] = value
        return cls(c, order)

    @classmethod
    def variables(cls, x, y, order=ORDER):
        """The coordinate functions X, Y expanded at points (x, y)."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        idx = _index(order)
        X = cls.constant(x, x.shape, order)
        Y = cls.constant(y, y.shape, order)
        if order >= 1:
            X.c[idx[(1, 0)]] = 1.0
            Y.c[idx[(0, 1)]] = 1.0
        return X, Y

    def _like(self, c):
        return TaylorScalar(c, self.order)

    def _lift(self, other):
        if isinstance(other, TaylorScalar):
            return other
        return TaylorScalar.constant(other, self.c.shape[1:], self.order)

    @property
    def value(self):
        return self.c[0]

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, TaylorScalar):
            return self._like(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TaylorScalar):
            return self._like(self.c * other)
        a, b = self.c, other.c
        out = np.empty(np.broadcast_shapes(a.shape, b.shape))
        for n, pairs in enumerate(_product_table(self.order)):
            acc = a[pairs[0][0]] * b[pairs[0][1]]
            for p, q in pairs[1:]:
                acc = acc + a[p] * b[q]
            out[n] = acc
        return self._like(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, TaylorScalar):
            return self._like(self.c / other)
        return self * other ** -1

    def __rtruediv__(self, other):
        return self._lift(other) * self ** -1

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = self._lift(1.0)
            base = self
            k = int(p)
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        a0 = self.c[0]
        coeffs = [comb_general(p, k) * a0 ** (p - k) for k in range(self.order + 1)]
        return self._compose(coeffs)

    # elementary functions ------------------------------------------------
    def _compose(self, coeffs):
        """g(self) given coeffs[k] = g^(k)(a0) / k!."""
        d = self._like(self.c.copy())
        d.c[0] = 0.0
        out = self._lift(coeffs[0])
        power = None
        for k in range(1, self.order + 1):
            power = d if power is None else power * d
            out = out + power * coeffs[k]
        return out

    def sin(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        cyc = (s, c, -s, -c)
        return self._compose([cyc[k % 4] / factorial(k) for k in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        cyc = (c, -s, -c, s)
        return self._compose([cyc[k % 4] / factorial(k) for k in range(self.order + 1)])

    def sqrt(self):
        return self ** 0.5

    def arctan(self):
        a0 = self.c[0]
        # series of 1/(1 + (a0 + t)^2), then integrate term by term
        p = [1.0 + a0 ** 2, 2.0 * a0, np.ones_like(a0)]
        q = [1.0 / p[0]]
        for k in range(1, self.order):
            acc = sum(p[m] * q[k - m] for m in range(1, min(k, 2) + 1))
            q.append(-acc / p[0])
        coeffs = [np.arctan(a0)] + [q[k - 1] / k for k in range(1, self.order + 1)]
        return self._compose(coeffs)

    # derivative extraction -------------------------------------------------
    def partial(self, i, j):
        """d^(i+j) f / dx^i dy^j at the expansion points."""
        if i + j > self.order:
            raise ValueError(f"order {i + j} exceeds expansion order {self.order}")
        return factorial(i) * factorial(j) * self.c[_index(self.order)[(i, j)]]

    def gradient(self):
        return np.stack([self.partial(1, 0), self.partial(0, 1)], axis=-1)

    def hessian(self):
        xx, xy, yy = self.partial(2, 0), self.partial(1, 1), self.partial(0, 2)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    def bilaplacian(self):
        return self.partial(4, 0) + 2.0 * self.partial(2, 2) + self.partial(0, 4)


def comb_general(p, k):
    """Generalized binomial coefficient p choose k for real p."""
    if isinstance(p, (int, np.integer)) and p >= 0:
        return float(comb(int(p), k))
    out = 1.0
    for m in range(k):
        out *= (p - m) / (m + 1)
    return out


def sin(a):
    return a.sin() if isinstance(a, TaylorScalar) else np.sin(a)


def cos(a):
    return a.cos() if isinstance(a, TaylorScalar) else np.cos(a)


def sqrt(a):
    return a.sqrt() if isinstance(a, TaylorScalar) else np.sqrt(a)


def polar_angle(X, Y, theta0):
    """Angle function expanded at points where its value is ``theta0``.

    Uses theta = theta0 + arctan(cross / dot) relative to the expansion
    direction, which is smooth away from the origin and free of branch cuts.
    """
    x0, y0 = X.value, Y.value
    return ((X * (-y0) + Y * x0) / (X * x0 + Y * y0)).arctan() + theta0


def taylor_eval(recipe, x, y, order=ORDER):
    """Expand ``recipe(X, Y)`` at points ``(x, y)``."""
    X, Y = TaylorScalar.variables(x, y, order)
    return recipe(X, Y)


def bracket(a, b):
    """Von Karman bracket [a, b] of two expansions."""
    return (a.partial(2, 0) * b.partial(0, 2) + a.partial(0, 2) * b.partial(2, 0)
            - 2.0 * a.partial(1, 1) * b.partial(1, 1))
