"""Level-set domains ``O = {x in R^n : g(x) < 0}``.

Every domain evaluates ``g``, ``Dg`` and ``D^2 g`` on arrays of points with
shape ``(..., n)``.  Gallery domains carry analytic derivatives; user fields
fall back to central finite differences.

Gallery constructors accept parameter vectors longer than the truncation
dimension: the extra coordinates describe the infinite-dimensional object
and enter only through the cylindrical truncation ``G_n = G o P_n``.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial import Polynomial

from ..errors import DimensionMismatch, EmptyDomain

__all__ = [
    "LevelSetDomain",
    "WholeSpace",
    "HalfSpace",
    "Slab",
    "Sphere",
    "Ellipsoid",
    "QuadraticField",
    "Graph",
    "Rational1D",
    "IntegralFunctional",
    "sine_basis",
    "simpson_weights",
    "domain_from_spec",
]

GEOMETRY_TAGS = ("half_space", "graph", "sphere", "ellipsoid", "integral_functional", "custom")


def _points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise DimensionMismatch(f"expected points with trailing dimension {dim}, got {x.shape}")
    return x


class LevelSetDomain:
    """Domain defined by a scalar field ``g``.

    Parameters
    ----------
    dim : int
        Ambient dimension n.
    g : callable
        Maps an ``(..., n)`` array to ``(...)`` values.
    grad, hess : callable, optional
        Analytic derivatives with shapes ``(..., n)`` and ``(..., n, n)``.
        Central differences with step ``fd_step`` are used when omitted.
    band_delta : float
        Half-width of the band ``|g| <= delta`` used for the constants A, B.
    anchor : array_like, optional
        A point with ``g < 0``; boundary searches start from it.
    bounds : (lo, hi), optional
        Axis-aligned box containing the closure of the domain, or None when
        the domain is unbounded.
    """

    geometry_tag = "custom"

    def __init__(self, dim, g, grad=None, hess=None, band_delta=1.0, anchor=None, bounds=None,
                 fd_step=1e-5):
        if band_delta <= 0:
            raise ValueError("band_delta must be positive")
        self.dim = int(dim)
        self._g = g
        self._grad = grad
        self._hess = hess
        self.band_delta = float(band_delta)
        self.anchor = None if anchor is None else np.asarray(anchor, dtype=float)
        self.bounds = None if bounds is None else (np.asarray(bounds[0], float), np.asarray(bounds[1], float))
        self.fd_step = fd_step

    # -- field evaluation ------------------------------------------------
    def value(self, x):
        return np.asarray(self._g(_points(x, self.dim)), dtype=float)

    def gradient(self, x):
        x = _points(x, self.dim)
        if self._grad is not None:
            return np.asarray(self._grad(x), dtype=float)
        return self._fd_gradient(x)

    def hessian(self, x):
        x = _points(x, self.dim)
        if self._hess is not None:
            return np.asarray(self._hess(x), dtype=float)
        return self._fd_hessian(x)

    def _fd_gradient(self, x):
        eps = self.fd_step
        out = np.empty(x.shape, dtype=float)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = eps
            out[..., k] = (self.value(x + e) - self.value(x - e)) / (2 * eps)
        return out

    def _fd_hessian(self, x):
        # step balances truncation O(eps^2) against rounding O(u/eps^2)
        eps = max(self.fd_step, 1e-4)
        n = self.dim
        out = np.empty(x.shape + (n,), dtype=float)
        g0 = self.value(x)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = eps
            out[..., i, i] = (self.value(x + ei) - 2 * g0 + self.value(x - ei)) / eps**2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = eps
                v = (self.value(x + ei + ej) - self.value(x + ei - ej)
                     - self.value(x - ei + ej) + self.value(x - ei - ej)) / (4 * eps**2)
                out[..., i, j] = v
                out[..., j, i] = v
        return out

    def contains(self, x):
        return self.value(x) < 0.0

    @property
    def is_bounded(self) -> bool:
        return self.bounds is not None

    def closed_form_h(self, measure, x):
        """Gallery formula for the curvature functional; None for custom fields."""
        return None

    def describe(self) -> dict:
        return {"tag": self.geometry_tag, "dim": self.dim, "band_delta": self.band_delta}


class WholeSpace(LevelSetDomain):
    """``g = -1``: no boundary inside the truncation box."""

    geometry_tag = "custom"

    def __init__(self, dim):
        super().__init__(dim, g=lambda x: -np.ones(x.shape[:-1]),
                         grad=lambda x: np.zeros(x.shape),
                         hess=lambda x: np.zeros(x.shape + (x.shape[-1],)),
                         anchor=np.zeros(dim))

    def describe(self):
        return {"tag": "whole_space", "dim": self.dim}


class HalfSpace(LevelSetDomain):
    """``{<b, x> < c}`` with ``g = <b_n, x> - c``."""

    geometry_tag = "half_space"

    def __init__(self, b, c, dim, band_delta=1.0):
        b = np.asarray(b, dtype=float)
        if b.size < dim:
            b = np.concatenate([b, np.zeros(dim - b.size)])
        self.b_full = b
        self.b = b[:dim].copy()
        self.c = float(c)
        nb2 = float(self.b @ self.b)
        if nb2 == 0.0:
            raise EmptyDomain("b has no component in the first n coordinates")
        anchor = self.b * (self.c - 1.0) / nb2
        super().__init__(dim, g=self._value, grad=self._gradient, hess=self._hessian,
                         band_delta=band_delta, anchor=anchor)

    def _value(self, x):
        return x @ self.b - self.c

    def _gradient(self, x):
        return np.broadcast_to(self.b, x.shape).copy()

    def _hessian(self, x):
        return np.zeros(x.shape + (self.dim,))

    def closed_form_h(self, measure, x):
        x = _points(x, self.dim)
        val = self.c / float(np.sum(measure.eigenvalues[: self.dim] * self.b**2))
        return np.full(x.shape[:-1], val)

    def describe(self):
        return {**super().describe(), "b": self.b.tolist(), "c": self.c}


class Slab(LevelSetDomain):
    """``{|<b, x>| < c}`` with ``g = <b_n, x>^2 - c^2``."""

    geometry_tag = "slab"

    def __init__(self, b, c, dim, band_delta=None):
        b = np.asarray(b, dtype=float)
        if b.size < dim:
            b = np.concatenate([b, np.zeros(dim - b.size)])
        self.b_full = b
        self.b = b[:dim].copy()
        self.c = float(c)
        if self.c <= 0:
            raise EmptyDomain("slab half-width must be positive")
        if float(self.b @ self.b) == 0.0:
            raise EmptyDomain("b has no component in the first n coordinates")
        if band_delta is None:
            band_delta = 0.5 * self.c**2
        super().__init__(dim, g=self._value, grad=self._gradient, hess=self._hessian,
                         band_delta=band_delta, anchor=np.zeros(dim))

    def _value(self, x):
        return (x @ self.b) ** 2 - self.c**2

    def _gradient(self, x):
        return 2.0 * (x @ self.b)[..., None] * self.b

    def _hessian(self, x):
        return np.broadcast_to(2.0 * np.outer(self.b, self.b), x.shape + (self.dim,))

    def describe(self):
        return {**super().describe(), "b": self.b.tolist(), "c": self.c}


class Ellipsoid(LevelSetDomain):
    """``{<T(x - x0), x - x0> < r^2}`` for diagonal ``T = diag(t_k)``."""

    geometry_tag = "ellipsoid"

    def __init__(self, t, center, radius, dim, band_delta=None):
        t = np.asarray(t, dtype=float)
        center = np.asarray(center, dtype=float)
        if t.size < dim:
            raise DimensionMismatch("need at least n diagonal coefficients")
        if center.size < dim:
            center = np.concatenate([center, np.zeros(dim - center.size)])
        if np.any(t <= 0):
            raise ValueError("ellipsoid coefficients must be positive")
        self.t_full, self.center_full = t, center
        self.t = t[:dim].copy()
        self.center = center[:dim].copy()
        self.radius = float(radius)
        m = min(t.size, center.size)
        self.tail = float(np.sum(t[dim:m] * center[dim:m] ** 2))
        rn2 = self.radius**2 - self.tail
        if rn2 <= 0:
            raise EmptyDomain("the truncated ellipsoid is empty (tail of the centre exceeds r^2)")
        self.rn = float(np.sqrt(rn2))
        half = self.rn / np.sqrt(self.t)
        if band_delta is None:
            band_delta = 0.5 * rn2
        super().__init__(dim, g=self._value, grad=self._gradient, hess=self._hessian,
                         band_delta=band_delta, anchor=self.center.copy(),
                         bounds=(self.center - half, self.center + half))

    def _value(self, x):
        d = x - self.center
        return np.sum(self.t * d * d, axis=-1) + self.tail - self.radius**2

    def _gradient(self, x):
        return 2.0 * self.t * (x - self.center)

    def _hessian(self, x):
        # read-only view; constant Hessian
        return np.broadcast_to(2.0 * np.diag(self.t), x.shape + (self.dim,))

    def closed_form_h(self, measure, x):
        x = _points(x, self.dim)
        lam = measure.eigenvalues[: self.dim]
        t = self.t
        d = x - self.center
        q = np.sum(lam * t**2 * d**2, axis=-1)
        inner = np.sum(t * d * x, axis=-1) - np.sum(lam * t)
        ratio = np.sum(lam**2 * t**3 * d**2, axis=-1) / q
        return (inner + ratio) / (2.0 * q)

    def describe(self):
        return {**super().describe(), "t": self.t.tolist(), "center": self.center.tolist(),
                "radius": self.radius}


class Sphere(Ellipsoid):
    """Ball ``{||x - x0||^2 < r^2}``; truncation gives the radius ``r_n``."""

    geometry_tag = "sphere"

    def __init__(self, center, radius, dim, band_delta=None):
        center = np.asarray(center, dtype=float)
        super().__init__(np.ones(max(dim, center.size)), center, radius, dim, band_delta=band_delta)

    def closed_form_h(self, measure, x):
        x = _points(x, self.dim)
        lam = measure.eigenvalues[: self.dim]
        d = x - self.center
        q = np.sum(lam * d**2, axis=-1)
        bracket = np.sum(d * x, axis=-1) - np.sum(lam) + np.sum(lam**2 * d**2, axis=-1) / q
        return bracket / (2.0 * q)

    def describe(self):
        out = super().describe()
        out.pop("t")
        return out


class QuadraticField:
    """``phi(y) = c + <m, y> + y^T P y / 2`` on R^d."""

    def __init__(self, c=0.0, m=None, P=None, dim=None):
        if dim is None:
            dim = len(m) if m is not None else len(P)
        self.dim = dim
        self.c = float(c)
        self.m = np.zeros(dim) if m is None else np.asarray(m, dtype=float)
        P = np.zeros((dim, dim)) if P is None else np.asarray(P, dtype=float)
        self.P = 0.5 * (P + P.T)

    def value(self, y):
        return self.c + y @ self.m + 0.5 * np.einsum("...i,ij,...j->...", y, self.P, y)

    def gradient(self, y):
        return self.m + y @ self.P

    def hessian(self, y):
        return np.broadcast_to(self.P, y.shape + (self.dim,)).copy()

    def describe(self):
        return {"c": self.c, "m": self.m.tolist(), "P": self.P.tolist()}


class Graph(LevelSetDomain):
    """Region below a graph: ``{x_k < phi(x without x_k)}``, ``g = x_k - phi``.

    ``k`` is a 0-based coordinate index; ``phi`` exposes ``value``,
    ``gradient`` and ``hessian`` on ``R^{n-1}``.
    """

    geometry_tag = "graph"

    def __init__(self, phi, k, dim, band_delta=1.0):
        if not 0 <= k < dim:
            raise DimensionMismatch(f"distinguished index {k} outside 0..{dim - 1}")
        if phi.dim != dim - 1:
            raise DimensionMismatch("phi must live on R^{n-1}")
        self.phi = phi
        self.k = int(k)
        self._others = np.array([j for j in range(dim) if j != k], dtype=int)
        anchor = np.zeros(dim)
        anchor[k] = float(phi.value(np.zeros(dim - 1))) - 1.0
        super().__init__(dim, g=self._value, grad=self._gradient, hess=self._hessian,
                         band_delta=band_delta, anchor=anchor)

    def _value(self, x):
        return x[..., self.k] - self.phi.value(x[..., self._others])

    def _gradient(self, x):
        out = np.zeros(x.shape)
        out[..., self._others] = -self.phi.gradient(x[..., self._others])
        out[..., self.k] = 1.0
        return out

    def _hessian(self, x):
        out = np.zeros(x.shape + (self.dim,))
        H = self.phi.hessian(x[..., self._others])
        idx = np.ix_(self._others, self._others)
        out[(Ellipsis,) + idx] = -H
        return out

    def closed_form_h(self, measure, x):
        from .gallery import graph_domain_h

        return graph_domain_h(measure, self.phi, self.k, x, check_boundary=False)

    def describe(self):
        return {**super().describe(), "k": self.k, "phi": self.phi.describe()}


class Rational1D:
    """Scalar ``p(xi)/q(xi)`` with ascending-order coefficient lists."""

    def __init__(self, numerator, denominator=(1.0,)):
        self.p = Polynomial(np.asarray(numerator, dtype=float))
        self.q = Polynomial(np.asarray(denominator, dtype=float))
        self._p1, self._p2 = self.p.deriv(1), self.p.deriv(2)
        self._q1, self._q2 = self.q.deriv(1), self.q.deriv(2)

    def __call__(self, s):
        return self.p(s) / self.q(s)

    def d1(self, s):
        q = self.q(s)
        return (self._p1(s) * q - self.p(s) * self._q1(s)) / q**2

    def d2(self, s):
        p, p1, p2 = self.p(s), self._p1(s), self._p2(s)
        q, q1, q2 = self.q(s), self._q1(s), self._q2(s)
        return (p2 * q**2 - 2 * p1 * q1 * q - p * q2 * q + 2 * p * q1**2) / q**3

    def describe(self):
        return {"numerator": self.p.coef.tolist(), "denominator": self.q.coef.tolist()}


def simpson_weights(panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Simpson nodes and weights on [0, 1]; ``panels`` must be even."""
    if panels % 2:
        raise ValueError("Simpson's rule needs an even number of panels")
    s = np.linspace(0.0, 1.0, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return s, w / (3.0 * panels)


def sine_basis(s: np.ndarray, n: int) -> np.ndarray:
    """``e_k(s) = sqrt(2) sin(k pi s)`` for k = 1..n, shape ``(len(s), n)``."""
    k = np.arange(1, n + 1)
    return np.sqrt(2.0) * np.sin(np.pi * np.outer(s, k))


class IntegralFunctional(LevelSetDomain):
    """``G_n(xi) = int_0^1 g1d(sum_k xi_k e_k(s)) ds - r`` on L^2(0, 1).

    The coordinates are taken in the sine basis, which diagonalises the
    inverse-square covariance.
    """

    geometry_tag = "integral_functional"
    PANELS = 2048

    def __init__(self, g1d, r, dim, band_delta=1.0, panels=PANELS):
        self.g1d = g1d
        self.r = float(r)
        self.s, self.w = simpson_weights(panels)
        self.E = sine_basis(self.s, dim)
        super().__init__(dim, g=self._value, grad=self._gradient, hess=self._hessian,
                         band_delta=band_delta)
        self.anchor = self._find_anchor()

    def path(self, x):
        """The function ``(P_n x)(s)`` on the quadrature nodes."""
        return x @ self.E.T

    def _value(self, x):
        return self.g1d(self.path(x)) @ self.w - self.r

    def _gradient(self, x):
        return (self.g1d.d1(self.path(x)) * self.w) @ self.E

    def _hessian(self, x):
        wg2 = self.g1d.d2(self.path(x)) * self.w
        return np.einsum("...s,sh,sl->...hl", wg2, self.E, self.E, optimize=True)

    def _find_anchor(self):
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        for sign in (-1.0, 1.0):
            t = 1.0
            for _ in range(60):
                if self.value(sign * t * e1) < 0:
                    return sign * t * e1
                t *= 2.0
        raise EmptyDomain("could not locate a point with G_n < 0 along e_1")

    def closed_form_h(self, measure, x):
        from .gallery import integral_functional_h

        return integral_functional_h(measure, self, x)

    def describe(self):
        return {**super().describe(), "g_1d": self.g1d.describe(), "r": self.r}


def domain_from_spec(spec: dict, dim: int) -> LevelSetDomain:
    """Build a gallery domain at truncation dimension ``dim`` from a config mapping."""
    tag = spec["tag"]
    kw = {}
    if "band_delta" in spec:
        kw["band_delta"] = spec["band_delta"]
    if tag == "half_space":
        return HalfSpace(spec["b"], spec["c"], dim, **kw)
    if tag == "slab":
        return Slab(spec["b"], spec["c"], dim, **kw)
    if tag == "sphere":
        return Sphere(spec.get("center", [0.0]), spec["radius"], dim, **kw)
    if tag == "ellipsoid":
        return Ellipsoid(spec["t"], spec.get("center", [0.0]), spec["radius"], dim, **kw)
    if tag == "graph":
        phi_spec = spec["phi"]
        m = phi_spec.get("m")
        P = phi_spec.get("P")
        m = None if m is None else np.asarray(m, dtype=float)[: dim - 1]
        P = None if P is None else np.asarray(P, dtype=float)[: dim - 1, : dim - 1]
        phi = QuadraticField(phi_spec.get("c", 0.0), m, P, dim=dim - 1)
        return Graph(phi, int(spec["k"]) - 1, dim, **kw)
    if tag == "integral_functional":
        gspec = spec["g_1d"]
        g1d = Rational1D(gspec["numerator"], gspec.get("denominator", [1.0]))
        hyp = spec.get("hypotheses")
        if hyp is not None:
            from .gallery import check_integral_hypotheses

            check_integral_hypotheses(g1d, hyp["a"], hyp["alpha"], hyp["beta"])
        return IntegralFunctional(g1d, spec["r"], dim, **kw)
    if tag == "whole_space":
        return WholeSpace(dim)
    raise ValueError(f"unknown geometry tag {tag!r}")

