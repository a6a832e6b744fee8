"""Symmetric weighted finite-volume scheme for ``lambda u - L u = f``.

``L u = (1/(2N)) sum_k d_k(lambda_k N d_k u)`` is discretised with face
densities ``N_{i+e_k/2}``; multiplying row ``i`` by ``N_i V`` gives the
symmetric matrix

    A = W (lambda I - L_h),   W = diag(N_i V),

whose quadratic form is ``lambda sum W u^2 + E(u)/2`` with the face-based
Dirichlet form ``E``.  A cut face at fraction ``theta`` with crossing
density ``N_b`` replaces the flux ``N_f (u_j - u_i)/h`` by
``N_b (0 - u_i)/(theta h)``.  This keeps ``A`` symmetric and an M-matrix, so
the energy identity and both a-priori bounds hold to solver tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import LinearOperator, cg

from ..errors import NonPositiveLambda, SolverDiverged
from ..spectral import density

__all__ = [
    "Assembly",
    "GridSolution",
    "assemble",
    "solve_dirichlet",
    "apply_ou_operator",
    "dirichlet_form",
    "sample_source",
]

SOLVER_RTOL = 1e-10
SOLVER_MAXITER = 100_000


@dataclass
class Assembly:
    """Stiffness part ``S`` (so that ``A = lambda W + S``) and the weights ``W``."""

    stiffness: sp.csr_matrix
    weights: np.ndarray


def _face_pairs(grid, k):
    """Interior cell pairs across faces normal to axis ``k``."""
    index = grid.index_map()
    n = grid.dim
    left = [slice(None)] * n
    right = [slice(None)] * n
    left[k], right[k] = slice(None, -1), slice(1, None)
    a, b = index[tuple(left)], index[tuple(right)]
    both = (a >= 0) & (b >= 0)
    return a[both], b[both]


def _face_midpoints(grid, pts, i, k):
    mid = pts[i].copy()
    mid[:, k] += 0.5 * grid.spacing[k]
    return mid


def assemble(measure, grid) -> Assembly:
    """Build ``S`` and ``W`` for the grid."""
    n = grid.dim
    lam = measure.eigenvalues[:n]
    sub = measure.truncate(n) if measure.dim > n else measure
    h = grid.spacing
    vol = grid.cell_volume
    m = grid.n_interior
    pts = grid.interior_points()
    weights = density(sub, pts) * vol

    rows, cols, vals = [], [], []
    diag = np.zeros(m)
    for k in range(n):
        i, j = _face_pairs(grid, k)
        nf = density(sub, _face_midpoints(grid, pts, i, k))
        c = lam[k] * nf * vol / (2.0 * h[k] ** 2)
        rows += [i, j]
        cols += [j, i]
        vals += [-c, -c]
        np.add.at(diag, i, c)
        np.add.at(diag, j, c)
    for cf in grid.cuts:
        k = cf.axis
        mid = pts[cf.cells].copy()
        mid[:, k] += 0.5 * cf.sign * cf.theta * h[k]
        nb = density(sub, mid)
        np.add.at(diag, cf.cells, lam[cf.axis] * nb * vol / (2.0 * cf.theta * h[k] ** 2))
    rows.append(np.arange(m))
    cols.append(np.arange(m))
    vals.append(diag)
    S = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(m, m))
    return Assembly(stiffness=S, weights=weights)


def dirichlet_form(assembly: Assembly, u) -> float:
    """``E(u) = 2 u^T S u``, the discrete ``int |Q^{1/2} Du|^2 dmu``."""
    return float(2.0 * u @ (assembly.stiffness @ u))


def sample_source(grid, f):
    """Evaluate ``f`` (callable, scalar or array) on interior cells."""
    if callable(f):
        return np.asarray(f(grid.interior_points()), dtype=float).reshape(grid.n_interior)
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        return np.full(grid.n_interior, float(f))
    if f.shape == grid.shape:
        return f[grid.mask]
    return f.reshape(grid.n_interior)


@dataclass
class GridSolution:
    """Discrete weak solution on the interior cells of ``grid``."""

    grid: object
    measure: object
    resolvent_lambda: float
    u: np.ndarray
    f: np.ndarray
    assembly: Assembly = field(repr=False)
    residual: float = 0.0
    iterations: int = 0

    @property
    def values(self) -> np.ndarray:
        """Null-extended values on the full grid."""
        return self.grid.extend(self.u)

    @property
    def weights(self) -> np.ndarray:
        return self.assembly.weights

    def l2_sq(self, v=None) -> float:
        v = self.u if v is None else v
        return float(self.weights @ (v * v))

    def f_norm_sq(self) -> float:
        return self.l2_sq(self.f)

    def grad_sq(self) -> float:
        return dirichlet_form(self.assembly, self.u)

    def evaluate(self, points) -> np.ndarray:
        """Multilinear interpolation of the null-extended values."""
        interp = RegularGridInterpolator(self.grid.axes(), self.values, method="linear",
                                         bounds_error=False, fill_value=0.0)
        return interp(np.atleast_2d(np.asarray(points, dtype=float)))


def solve_dirichlet(measure, grid, f, lam, rtol=SOLVER_RTOL, maxiter=SOLVER_MAXITER) -> GridSolution:
    """Solve ``lam u - L u = f`` with ``u = 0`` on the boundary.

    Conjugate gradients with a Jacobi preconditioner on the symmetric system
    ``A u = W f``.

    Raises
    ------
    NonPositiveLambda
        If ``lam <= 0``.
    SolverDiverged
        If the relative residual does not reach ``rtol`` in ``maxiter`` steps.
    """
    if not lam > 0:
        raise NonPositiveLambda(f"lambda must be positive, got {lam}")
    fv = sample_source(grid, f)
    if not np.all(np.isfinite(fv)):
        raise ValueError("source is not finite on interior cells")
    asm = assemble(measure, grid)
    A = (asm.stiffness + sp.diags(lam * asm.weights)).tocsr()
    b = asm.weights * fv
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        u = np.zeros_like(b)
        return GridSolution(grid, measure, float(lam), u, fv, asm, 0.0, 0)
    dinv = 1.0 / A.diagonal()
    M = LinearOperator(A.shape, matvec=lambda r: dinv * r, dtype=float)
    count = [0]

    def tick(_):
        count[0] += 1

    u, info = cg(A, b, rtol=rtol, atol=0.0, maxiter=maxiter, M=M, callback=tick)
    res = float(np.linalg.norm(b - A @ u) / bnorm)
    if info != 0 or not np.isfinite(res) or res > 10.0 * rtol:
        raise SolverDiverged(f"CG stopped with info={info}, relative residual {res:.3e}")
    return GridSolution(grid, measure, float(lam), u, fv, asm, res, count[0])


def apply_ou_operator(measure, grid, values, assembly=None) -> np.ndarray:
    """``L_h u`` on interior cells, zero Dirichlet data at cuts."""
    asm = assembly if assembly is not None else assemble(measure, grid)
    u = sample_source(grid, values)
    return -(asm.stiffness @ u) / asm.weights
