"""Odd C^2 cap profile used to flatten ``g`` away from the boundary band."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SmoothCap", "smooth_cap_apply"]


@dataclass(frozen=True)
class SmoothCap:
    """Profile ``eta`` with ``eta(r) = r`` on ``[0, delta/2]`` and constant for ``r >= delta``.

    On ``[delta/2, delta]`` the derivative blends from 1 to 0 through the cubic
    smoothstep ``(1 - s)^2 (1 + 2 s)``, so ``0 <= eta' <= 1`` and
    ``|eta''| <= 3/delta`` with equality at the midpoint of the blend.  A
    derivative bounded by one forces the plateau below ``delta``: it sits at
    ``3 delta / 4``.
    """

    delta: float
    check_points: int = 10_000

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        r = np.linspace(-2.0 * self.delta, 2.0 * self.delta, self.check_points)
        d1, d2 = self.d1(r), self.d2(r)
        if np.max(np.abs(d1)) > 1.0 + 1e-9:
            raise ValueError(f"profile violates |eta'| <= 1 (max {np.max(np.abs(d1))})")
        if np.max(np.abs(d2)) > 3.0 / self.delta + 1e-9:
            raise ValueError(f"profile violates |eta''| <= 3/delta (max {np.max(np.abs(d2))})")

    @property
    def plateau(self) -> float:
        return 0.75 * self.delta

    def _split(self, r):
        r = np.asarray(r, dtype=float)
        a = np.abs(r)
        half = 0.5 * self.delta
        s = np.clip((a - half) / half, 0.0, 1.0)
        return r, a, s, half

    def __call__(self, r):
        r, a, s, half = self._split(r)
        blend = half + half * (s - s**3 + 0.5 * s**4)
        out = np.where(a <= half, a, blend)
        return np.sign(r) * out

    def d1(self, r):
        _, a, s, half = self._split(r)
        return np.where(a <= half, 1.0, (1.0 - s) ** 2 * (1.0 + 2.0 * s))

    def d2(self, r):
        r, a, s, half = self._split(r)
        return np.where(a <= half, 0.0, -np.sign(r) * 6.0 * s * (1.0 - s) / half)


def smooth_cap_apply(cap: SmoothCap, g_value, Dg, D2g):
    """Chain rule for ``g~ = eta o g``.

    Returns ``(eta(g), eta'(g) Dg, eta'(g) D2g + eta''(g) Dg Dg^T)`` for arrays
    of shape ``(...)``, ``(..., n)``, ``(..., n, n)``.
    """
    g_value = np.asarray(g_value, dtype=float)
    Dg = np.asarray(Dg, dtype=float)
    D2g = np.asarray(D2g, dtype=float)
    e1 = cap.d1(g_value)
    e2 = cap.d2(g_value)
    gt = cap(g_value)
    Dgt = e1[..., None] * Dg
    D2gt = e1[..., None, None] * D2g + e2[..., None, None] * Dg[..., :, None] * Dg[..., None, :]
    return gt, Dgt, D2gt
