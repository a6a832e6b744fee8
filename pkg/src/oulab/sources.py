"""Source fields ``f`` / ``F`` built from config mappings.

Every field maps an ``(m, n)`` array of points to ``(m,)`` values and depends
only on the coordinates it names, so ``F o P_n`` is the same callable
evaluated on truncated points.
"""
from __future__ import annotations

import numpy as np

__all__ = ["Field", "constant", "bump", "linear", "random_trig", "source_from_spec"]


class Field:
    """Callable field with a JSON-friendly description and a sup bound."""

    def __init__(self, func, spec, sup=None):
        self._func = func
        self.spec = dict(spec)
        self.sup = sup

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self._func(x), dtype=float)

    @property
    def is_zero(self) -> bool:
        return self.spec.get("kind") == "constant" and self.spec.get("value", 0.0) == 0.0


def constant(value=1.0):
    v = float(value)
    return Field(lambda x: np.full(x.shape[0], v), {"kind": "constant", "value": v}, sup=abs(v))


def bump(center=(0.0,), radius=0.5, amplitude=1.0):
    """``amplitude * exp(1 - 1/(1 - |x-c|^2/rho^2))`` inside the ball, 0 outside."""
    c = np.asarray(center, dtype=float)

    def f(x):
        d = x - np.pad(c, (0, max(0, x.shape[1] - c.size)))[: x.shape[1]]
        r2 = np.sum(d * d, axis=-1) / radius**2
        out = np.zeros(x.shape[0])
        ins = r2 < 1.0
        out[ins] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[ins]))
        return out

    spec = {"kind": "bump", "center": c.tolist(), "radius": float(radius), "amplitude": float(amplitude)}
    return Field(f, spec, sup=abs(float(amplitude)))


def linear(coefficients):
    a = np.asarray(coefficients, dtype=float)

    def f(x):
        m = min(a.size, x.shape[1])
        return x[:, :m] @ a[:m]

    return Field(f, {"kind": "linear", "coefficients": a.tolist()})


def random_trig(seed, dim, terms=6, scale=3.0):
    """``sum_j a_j cos(<w_j, x> + p_j)`` with Gaussian ``a``, ``w`` and uniform phases."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(terms)
    w = scale * rng.standard_normal((terms, dim))
    p = rng.uniform(0.0, 2.0 * np.pi, terms)

    def f(x):
        return np.cos(x[:, :dim] @ w.T + p) @ a

    spec = {"kind": "random", "seed": int(seed), "terms": int(terms), "scale": float(scale)}
    return Field(f, spec, sup=float(np.sum(np.abs(a))))


def source_from_spec(spec, dim):
    """Build a field from ``{"kind": ..., ...}``; a bare number means a constant."""
    if isinstance(spec, (int, float)):
        return constant(spec)
    kind = spec["kind"]
    if kind == "constant":
        return constant(spec.get("value", 1.0))
    if kind == "bump":
        return bump(spec.get("center", [0.0]), spec.get("radius", 0.5), spec.get("amplitude", 1.0))
    if kind == "linear":
        return linear(spec["coefficients"])
    if kind == "random":
        return random_trig(spec["seed"], dim, spec.get("terms", 6), spec.get("scale", 3.0))
    raise ValueError(f"unknown source kind {kind!r}")
