"""Boundary quantities of grid solutions.

Derivatives of ``u`` at a boundary point ``p`` come from a least-squares
cubic fit (no constant term, since ``u(p) = 0``) to the interior cell values
and the zero values at nearby cut crossings, all within a radius ``R`` of
``p``.  ``R`` shrinks like ``sqrt(h)``: the fit then averages out the
irregular cut-cell error while its truncation error still vanishes.
"""
from __future__ import annotations

import itertools
import warnings

import numpy as np
from scipy.spatial import cKDTree

from ..errors import BoundaryOutsideGrid, UnboundedDomain, UnsupportedSource
from ..geometry.curvature import DEGENERATE_THRESHOLD, bisect_level, curvature_h_unchecked
from ..spectral import density
from .norms import deep_mask, sobolev_norms

__all__ = [
    "BoundaryFit",
    "ray_boundary_points",
    "boundary_identity_residual",
    "trace_inequality_check",
]


def _monomials(n, degree):
    exps = [e for d in range(1, degree + 1)
            for e in itertools.product(range(d + 1), repeat=n) if sum(e) == d]
    return np.array(exps, dtype=int)


class BoundaryFit:
    """Local polynomial fits of a grid solution near the boundary.

    Parameters
    ----------
    sol : GridSolution
    radius : float, optional
        Fit radius; defaults to ``max(4 h, 0.8 sqrt(h L))`` with ``h`` the
        largest spacing and ``L`` the half-width of the domain bounding box.
    degree : int
        Total degree of the fitted polynomial.
    """

    def __init__(self, sol, radius=None, degree=3):
        grid = sol.grid
        self.sol = sol
        self.n = grid.dim
        hmax = float(np.max(grid.spacing))
        if radius is None:
            if grid.domain is not None and grid.domain.bounds is not None:
                lo, hi = grid.domain.bounds
                L = 0.5 * float(np.max(hi - lo))
            else:
                L = 1.0
            radius = max(4.0 * hmax, 0.8 * np.sqrt(hmax * L))
        self.radius = float(radius)
        self.exps = _monomials(self.n, degree)
        self.centers = grid.interior_points()
        self.tree_in = cKDTree(self.centers)
        cut_pts = [c.points for c in grid.cuts if c.points.size]
        self.zeros = np.concatenate(cut_pts) if cut_pts else np.empty((0, self.n))
        self.tree_zero = cKDTree(self.zeros) if self.zeros.size else None

    def _design(self, dx):
        z = dx / self.radius
        return np.prod(z[:, None, :] ** self.exps[None, :, :], axis=-1)

    def derivatives(self, p):
        """``(Du(p), D^2u(p))`` from the local fit."""
        p = np.asarray(p, dtype=float)
        near = self.tree_in.query_ball_point(p, self.radius)
        pts = [self.centers[near]]
        vals = [self.sol.u[near]]
        if self.tree_zero is not None:
            zn = self.tree_zero.query_ball_point(p, self.radius)
            pts.append(self.zeros[zn])
            vals.append(np.zeros(len(zn)))
        X = np.concatenate(pts) - p
        y = np.concatenate(vals)
        D = self._design(X)
        if D.shape[0] < D.shape[1]:
            raise ValueError("too few points for the boundary fit; increase the radius")
        coef, *_ = np.linalg.lstsq(D, y, rcond=None)
        n = self.n
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        for c, e in zip(coef, self.exps):
            d = int(e.sum())
            if d == 1:
                grad[int(np.argmax(e))] = c / self.radius
            elif d == 2:
                idx = np.flatnonzero(e)
                if idx.size == 1:
                    hess[idx[0], idx[0]] = 2.0 * c / self.radius**2
                else:
                    hess[idx[0], idx[1]] = hess[idx[1], idx[0]] = c / self.radius**2
        return grad, hess


def _directions(n, count):
    """Unit directions and solid-angle weights."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if n == 2:
        phi = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(count, 2.0 * np.pi / count)
    m_z = max(4, int(np.sqrt(count / 2)))
    m_phi = 2 * m_z
    z, wz = np.polynomial.legendre.leggauss(m_z)
    phi = 2.0 * np.pi * np.arange(m_phi) / m_phi
    Z, P = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1.0 - Z**2)
    dirs = np.stack([s * np.cos(P), s * np.sin(P), Z], axis=-1).reshape(-1, 3)
    w = (wz[:, None] * np.full(m_phi, 2.0 * np.pi / m_phi)[None, :]).ravel()
    return dirs, w


def ray_boundary_points(domain, count=64):
    """Boundary points along rays from the anchor of a bounded, star-shaped domain.

    Returns ``(points, directions, radii, weights)`` with ``weights`` the
    solid-angle quadrature weights.
    """
    if domain.bounds is None or domain.anchor is None:
        raise UnboundedDomain("ray quadrature needs a bounded domain with an anchor")
    dirs, w = _directions(domain.dim, count)
    lo, hi = domain.bounds
    reach = 2.0 * float(np.linalg.norm(hi - lo)) + 1.0
    inside = np.broadcast_to(domain.anchor, dirs.shape).copy()
    outside = inside + reach * dirs
    pts = bisect_level(domain, inside, outside, tol=1e-13)
    radii = np.linalg.norm(pts - domain.anchor, axis=-1)
    return pts, dirs, radii, w


def _check_source(sol):
    near = sol.grid.mask & ~deep_mask(sol.grid, layers=2)
    f_full = sol.grid.extend(sol.f)
    scale = max(float(np.max(np.abs(sol.f))), 1e-300)
    if np.any(np.abs(f_full[near]) > 1e-12 * scale):
        raise UnsupportedSource("the source does not vanish near the boundary")


def _check_inside_box(sol, points, margin=2):
    grid = sol.grid
    pad = margin * grid.spacing
    if np.any(points < grid.lo + pad) or np.any(points > grid.hi - pad):
        raise BoundaryOutsideGrid("boundary points fall outside the grid box; enlarge box_halfwidth")


def _nondegenerate(measure, domain, points):
    """Mask of points with ``|Q^{1/2} Dg| >= threshold``; warns with the skip count."""
    lam = measure.eigenvalues[: domain.dim]
    norm = np.sqrt((domain.gradient(points) ** 2) @ lam)
    keep = norm >= DEGENERATE_THRESHOLD
    skipped = int(np.count_nonzero(~keep))
    if skipped:
        warnings.warn(f"skipped {skipped} boundary points with degenerate gradient", RuntimeWarning,
                      stacklevel=3)
    return keep, skipped


def boundary_identity_residual(measure, sol, domain, points=None, fit=None, count=64):
    """Max over boundary points of ``|<D^2u QDg, QDu> - h <Q^{1/2}Du, Q^{1/2}Dg>^2| / ||f||^2``.

    Points with a degenerate ``|Q^{1/2} Dg|`` are skipped with a warning.

    Raises
    ------
    UnsupportedSource
        When ``f`` is nonzero within two cell layers of the boundary.
    BoundaryOutsideGrid
        When a boundary point lies within two cells of the grid box or beyond.
    """
    fnorm = sol.f_norm_sq()
    if fnorm == 0.0:
        return 0.0
    _check_source(sol)
    if points is None:
        points = ray_boundary_points(domain, count)[0]
    _check_inside_box(sol, points)
    points = points[_nondegenerate(measure, domain, points)[0]]
    fit = fit or BoundaryFit(sol)
    n = domain.dim
    lam = measure.eigenvalues[:n]
    hvals = curvature_h_unchecked(measure, domain, points)
    Dg = domain.gradient(points)
    worst = 0.0
    for p, hp, dg in zip(points, hvals, Dg):
        Du, D2u = fit.derivatives(p)
        lhs = float((lam * dg) @ D2u @ (lam * Du))
        rhs = float(hp * np.sum(lam * Du * dg) ** 2)
        worst = max(worst, abs(lhs - rhs))
    return worst / fnorm


def trace_inequality_check(measure, sol, domain, report, count=64, fit=None, norms=None):
    """Slack of the boundary trace inequality for bounded domains.

    Left side ``int_{dO} <Q^{1/2}Du, Q^{1/2}Dg>^2 / |Q^{1/2}Dg| dsigma`` by ray
    quadrature with ``ds = rho^{n-1} |Dg| / |<Dg, omega>| domega``; right side
    ``(2 ||Lu|| + ||QD^2u||) ||Q^{1/2}Du|| A + B ||Q^{1/2}Du||^2`` with
    ``Lu = lam u - f``.

    Boundary points where ``|Q^{1/2} Dg|`` is degenerate are left out of the
    quadrature; their number is returned as ``skipped`` (with a warning).

    Returns
    -------
    dict with ``lhs``, ``rhs``, ``slack = rhs - lhs`` and ``skipped``.

    Raises
    ------
    UnboundedDomain
    BoundaryOutsideGrid
    """
    if domain.bounds is None:
        raise UnboundedDomain("the trace inequality check needs a bounded domain")
    n = domain.dim
    lam = measure.eigenvalues[:n]
    sub = measure.truncate(n) if measure.dim > n else measure
    pts, dirs, radii, w = ray_boundary_points(domain, count)
    _check_inside_box(sol, pts)
    keep, skipped = _nondegenerate(measure, domain, pts)
    pts, dirs, radii, w = pts[keep], dirs[keep], radii[keep], w[keep]
    norms = norms or sobolev_norms(measure, sol)
    if not np.any(sol.u):
        return {"lhs": 0.0, "rhs": 0.0, "slack": 0.0, "skipped": skipped}
    fit = fit or BoundaryFit(sol)
    Dg = domain.gradient(pts)
    Nb = density(sub, pts)
    lhs = 0.0
    for p, dg, om, rho, wt, nb in zip(pts, Dg, dirs, radii, w, Nb):
        Du, _ = fit.derivatives(p)
        inner = float(np.sum(lam * Du * dg))
        lhs += wt * inner**2 * nb * rho ** (n - 1) / abs(float(dg @ om))
    Lu = sol.resolvent_lambda * sol.u - sol.f
    lu_norm = np.sqrt(sol.l2_sq(Lu))
    grad = np.sqrt(norms.grad_sq)
    rhs = (2.0 * lu_norm + np.sqrt(norms.hess_sq)) * grad * report.A + report.B * grad**2
    return {"lhs": float(lhs), "rhs": float(rhs), "slack": float(rhs - lhs), "skipped": skipped}
