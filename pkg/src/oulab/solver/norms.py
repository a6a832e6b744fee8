"""Weighted Sobolev norms and the energy / a-priori / W^{2,2} checks.

Conventions: ``|Q^{1/2} Du|^2 = sum lambda_k (D_k u)^2`` and
``Tr[(Q D^2 u)^2] = sum lambda_h lambda_k (D_hk u)^2``.  The first-order
term is the face-based Dirichlet form of the scheme; second derivatives are
central differences on cells at least two layers inside the mask.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import binary_erosion, generate_binary_structure

from .scheme import GridSolution, assemble, dirichlet_form, sample_source

__all__ = [
    "SobolevNorms",
    "sobolev_norms",
    "grid_norms",
    "hessian_field",
    "deep_mask",
    "check_energy_identity",
    "check_apriori",
    "w22_constant",
    "check_w22_bound",
]


@dataclass
class SobolevNorms:
    """Squared components and the resulting norms.

    ``omitted_mass`` is the measure of interior cells excluded from the
    second-derivative sum.
    """

    l2_sq: float
    grad_sq: float
    hess_sq: float
    omitted_mass: float

    @property
    def l2(self) -> float:
        return float(np.sqrt(self.l2_sq))

    @property
    def w12(self) -> float:
        return float(np.sqrt(self.l2_sq + self.grad_sq))

    @property
    def w22(self) -> float:
        return float(np.sqrt(self.l2_sq + self.grad_sq + self.hess_sq))

    def to_dict(self) -> dict:
        return {**asdict(self), "l2": self.l2, "w12": self.w12, "w22": self.w22}


def deep_mask(grid, layers=2) -> np.ndarray:
    """Interior cells whose ``layers``-neighbourhood (with diagonals) is interior."""
    structure = generate_binary_structure(grid.dim, grid.dim)
    return binary_erosion(grid.mask, structure=structure, iterations=layers, border_value=0)


def hessian_field(grid, values) -> np.ndarray:
    """Central second differences of the full-grid ``values``; shape ``shape + (n, n)``.

    Entries are meaningful only where all neighbours used are in the grid.
    """
    n = grid.dim
    h = grid.spacing
    v = np.pad(values, 1)
    core = tuple(slice(1, -1) for _ in range(n))
    out = np.zeros(grid.shape + (n, n))

    def shifted(offsets):
        return v[tuple(slice(1 + o, v.shape[d] - 1 + o) for d, o in enumerate(offsets))]

    for a in range(n):
        ea = [0] * n
        ea[a] = 1
        plus = shifted(ea)
        minus = shifted([-e for e in ea])
        out[..., a, a] = (plus - 2.0 * v[core] + minus) / h[a] ** 2
        for b in range(a + 1, n):
            pp = [0] * n
            pp[a], pp[b] = 1, 1
            pm = [0] * n
            pm[a], pm[b] = 1, -1
            mixed = (shifted(pp) - shifted(pm) - shifted([-o for o in pm]) + shifted([-o for o in pp]))
            out[..., a, b] = out[..., b, a] = mixed / (4.0 * h[a] * h[b])
    return out


def grid_norms(measure, grid, values, assembly=None) -> SobolevNorms:
    """Norms of arbitrary interior values (callable, array or full-grid array)."""
    asm = assembly if assembly is not None else assemble(measure, grid)
    u = sample_source(grid, values)
    n = grid.dim
    lam = measure.eigenvalues[:n]
    w = asm.weights
    l2_sq = float(w @ (u * u))
    grad_sq = dirichlet_form(asm, u)
    deep = deep_mask(grid)
    H = hessian_field(grid, grid.extend(u))
    tr = np.einsum("...hk,h,k->...", H**2, lam, lam)
    wfull = grid.extend(w)
    hess_sq = float(np.sum(wfull[deep] * tr[deep]))
    omitted = float(np.sum(wfull[grid.mask & ~deep]))
    return SobolevNorms(l2_sq, grad_sq, hess_sq, omitted)


def sobolev_norms(measure, sol: GridSolution) -> SobolevNorms:
    """``(L^2, W^{1,2}, W^{2,2})`` data of a solution; see :class:`SobolevNorms`."""
    return grid_norms(measure, sol.grid, sol.u, assembly=sol.assembly)


def check_energy_identity(measure, sol: GridSolution) -> float:
    """``|lam int u^2 + E/2 - int f u| / ||f||^2`` (0 for a zero source)."""
    lam = sol.resolvent_lambda
    fnorm = sol.f_norm_sq()
    if fnorm == 0.0:
        return 0.0
    gap = lam * sol.l2_sq() + 0.5 * sol.grad_sq() - float(sol.weights @ (sol.f * sol.u))
    return abs(gap) / fnorm


def check_apriori(measure, sol: GridSolution):
    """Slacks ``(||f||^2/lam^2 - int u^2, 2||f||^2/lam - int |Q^{1/2}Du|^2)``."""
    lam = sol.resolvent_lambda
    fnorm = sol.f_norm_sq()
    return fnorm / lam**2 - sol.l2_sq(), 2.0 * fnorm / lam - sol.grad_sq()


def w22_constant(lam, A, B, C) -> float:
    """``M = 8 + 4 max(C,0) (2 + 2 sqrt(2) A / sqrt(lam) + |C| A^2 / lam + B / lam)``."""
    if C <= 0:
        return 8.0
    return 8.0 + 4.0 * C * (2.0 + 2.0 * np.sqrt(2.0) * A / np.sqrt(lam) + abs(C) * A * A / lam + B / lam)


def check_w22_bound(measure, sol: GridSolution, report, norms: SobolevNorms | None = None):
    """Return ``(achieved ||u||^2_{W^{2,2}} / ||f||^2, K^2, M)``.

    ``K^2 = 1/lam^2 + 2/lam + M``.  The achieved ratio is NaN for ``f = 0``.
    """
    lam = sol.resolvent_lambda
    norms = norms if norms is not None else sobolev_norms(measure, sol)
    M = w22_constant(lam, report.A, report.B, report.C)
    K2 = 1.0 / lam**2 + 2.0 / lam + M
    fnorm = sol.f_norm_sq()
    ratio = (norms.l2_sq + norms.grad_sq + norms.hess_sq) / fnorm if fnorm > 0 else float("nan")
    return ratio, K2, M
