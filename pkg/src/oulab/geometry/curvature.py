"""Curvature functional ``h`` and sampled estimates of the constants A, B, C.

``h(x) = -2 Lg / |Q^{1/2} Dg|^2 + <D^2g QDg, QDg> / |Q^{1/2} Dg|^4`` with
``Lg = (1/2) sum lambda_k D_kk g - (1/2) sum x_k D_k g``.

The suprema defining A, B, C have no exact algorithm for general ``g``;
:func:`constants_ABC` samples the band and the boundary, then runs a projected
gradient ascent of ``h`` along ``g = 0``.  All three values are lower bounds
of the true suprema.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DegenerateGradient, NoBoundaryFound, NotOnBoundary
from .cap import SmoothCap, smooth_cap_apply

__all__ = [
    "DEGENERATE_THRESHOLD",
    "SamplerConfig",
    "CurvatureReport",
    "ou_generator_g",
    "curvature_h",
    "curvature_h_unchecked",
    "sample_boundary",
    "bisect_level",
    "constants_ABC",
]

DEGENERATE_THRESHOLD = 1e-8
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for :func:`constants_ABC`.

    ``n_starts`` Gaussian proposals are paired with interior points and
    bisected to the boundary; the ``ascent_starts`` best boundary points are
    refined by ``ascent_iters`` projected-gradient steps with central
    differences of step ``fd_step``.  Unbounded domains are sampled inside the
    box ``|x_k| <= box_halfwidth * sqrt(lambda_k)``.
    """

    n_starts: int = 512
    ascent_iters: int = 50
    ascent_starts: int = 16
    fd_step: float = 1e-5
    box_halfwidth: float = 6.0
    seed: int = 0


@dataclass
class CurvatureReport:
    A: float
    B: float
    C: float
    a: float
    b: float
    delta: float
    sample_count: int
    boundary_count: int
    ascent_iterations: int
    is_lower_bound_estimate: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def ou_generator_g(measure, x, Dg, D2g):
    """``Lg`` for the finite-dimensional OU operator."""
    lam = measure.eigenvalues[: Dg.shape[-1]]
    trace_term = np.sum(lam * np.diagonal(D2g, axis1=-2, axis2=-1), axis=-1)
    drift_term = np.sum(x * Dg, axis=-1)
    return 0.5 * trace_term - 0.5 * drift_term


def _h_from_derivatives(measure, x, Dg, D2g):
    lam = measure.eigenvalues[: Dg.shape[-1]]
    q = np.sum(lam * Dg * Dg, axis=-1)
    QDg = lam * Dg
    quad = np.sum(QDg * np.matmul(D2g, QDg[..., None])[..., 0], axis=-1)
    Lg = ou_generator_g(measure, x, Dg, D2g)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -2.0 * Lg / q + quad / q**2
    return h, np.sqrt(q)


def curvature_h_unchecked(measure, domain, x):
    """``h`` at arbitrary points; NaN where ``|Q^{1/2} Dg|`` is degenerate."""
    x = np.asarray(x, dtype=float)
    h, norm = _h_from_derivatives(measure, x, domain.gradient(x), domain.hessian(x))
    return np.where(norm < DEGENERATE_THRESHOLD, np.nan, h)


def curvature_h(measure, domain, x, boundary_tol=BOUNDARY_TOL):
    """Curvature functional at boundary points ``x`` (shape ``(n,)`` or ``(m, n)``).

    Raises
    ------
    NotOnBoundary
        If ``|g(x)| > boundary_tol`` at some point.
    DegenerateGradient
        If ``|Q^{1/2} Dg(x)| < 1e-8`` at some point.
    """
    x = np.asarray(x, dtype=float)
    gval = domain.value(x)
    if np.any(np.abs(gval) > boundary_tol):
        raise NotOnBoundary(f"|g(x)| = {np.max(np.abs(gval)):.3e} exceeds {boundary_tol:.1e}")
    h, norm = _h_from_derivatives(measure, x, domain.gradient(x), domain.hessian(x))
    if np.any(norm < DEGENERATE_THRESHOLD):
        raise DegenerateGradient(f"|Q^(1/2) Dg| = {np.min(norm):.3e} below {DEGENERATE_THRESHOLD}")
    return h


# -- boundary location -----------------------------------------------------

def bisect_level(domain, inside, outside, level=0.0, iters=200, tol=1e-10):
    """Points on segments ``[inside, outside]`` where ``g = level``.

    Requires ``g(inside) < level < g(outside)`` row-wise.  Bisection stops
    once ``|g - level| <= tol`` for every row or after ``iters`` halvings.
    """
    lo = np.zeros(inside.shape[0])
    hi = np.ones(inside.shape[0])
    d = outside - inside
    level = np.broadcast_to(np.asarray(level, dtype=float), lo.shape)
    best = inside.copy()
    best_err = np.abs(domain.value(inside) - level)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pts = inside + mid[:, None] * d
        gv = domain.value(pts) - level
        err = np.abs(gv)
        better = err < best_err
        best[better] = pts[better]
        best_err[better] = err[better]
        if np.all(best_err <= tol):
            break
        below = gv < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return best


def _proposals(measure, domain, rng, count, box_halfwidth):
    n = domain.dim
    sig = measure.sqrt_eigenvalues[:n]
    z = rng.standard_normal((count, n)) * sig
    if domain.bounds is not None:
        lo, hi = domain.bounds
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        u = mid + 1.25 * half * rng.uniform(-1.0, 1.0, size=(count, n))
        z = np.concatenate([z, u])
    else:
        cap = box_halfwidth * sig
        z = np.clip(z, -cap, cap)
    return z


def _axis_probes(measure, domain, box_halfwidth):
    """Points far along each eigen-axis from the anchor."""
    if domain.anchor is None:
        return np.empty((0, domain.dim))
    n = domain.dim
    if domain.bounds is not None:
        lo, hi = domain.bounds
        reach = 2.0 * np.max(hi - lo) + 1.0
    else:
        reach = box_halfwidth * float(measure.sqrt_eigenvalues[0])
    eye = np.eye(n) * reach
    return np.concatenate([domain.anchor + eye, domain.anchor - eye])


def sample_boundary(measure, domain, rng, n_samples=512, box_halfwidth=6.0):
    """Locate points with ``g = 0`` by bisection.

    Proposals are Gaussian draws (plus uniform draws in the bounding box of
    bounded domains, plus rays along each eigen-axis from the anchor).  Every
    proposal with ``g > 0`` is paired with an interior point: a random
    interior proposal, or the anchor when none exists.

    Returns
    -------
    boundary : (m, n) array
    pairs : tuple of (inside, outside) arrays used for the bisection
    """
    z = np.concatenate([_proposals(measure, domain, rng, n_samples, box_halfwidth),
                        _axis_probes(measure, domain, box_halfwidth)])
    gz = domain.value(z)
    inner = z[gz < 0]
    if domain.anchor is not None:
        inner = np.concatenate([domain.anchor[None, :], inner])
    outer = z[gz > 0]
    if inner.shape[0] == 0 or outer.shape[0] == 0:
        raise NoBoundaryFound("no sign change of g among the proposals")
    idx = rng.integers(0, inner.shape[0], size=outer.shape[0])
    if domain.anchor is not None:
        # half of the segments start at the anchor for a fan of directions
        idx[::2] = 0
    inside = inner[idx]
    boundary = bisect_level(domain, inside, outer)
    ok = np.abs(domain.value(boundary)) <= 1e-10
    if not np.any(ok):
        raise NoBoundaryFound("bisection failed to reach |g| <= 1e-10")
    return boundary[ok], (inside, outer)


def _band_points(domain, rng, inside, outside, delta):
    """Points at random levels in ``[-delta, delta]`` along the bracketing segments."""
    levels = rng.uniform(-delta, delta, size=inside.shape[0])
    g_in, g_out = domain.value(inside), domain.value(outside)
    ok = (g_in < levels) & (levels < g_out)
    if not np.any(ok):
        return np.empty((0, domain.dim))
    return bisect_level(domain, inside[ok], outside[ok], level=levels[ok], tol=1e-12)


def _retract(domain, x, iters=8):
    """Newton projection onto ``g = 0`` along ``Dg``."""
    for _ in range(iters):
        gv = domain.value(x)
        Dg = domain.gradient(x)
        nrm2 = np.sum(Dg * Dg, axis=-1)
        step = np.where(nrm2 > 0, gv / np.where(nrm2 > 0, nrm2, 1.0), 0.0)
        x = x - step[:, None] * Dg
    return x


def _fd_grad_h(measure, domain, x, step):
    m, n = x.shape
    shifts = np.eye(n) * step
    plus = (x[:, None, :] + shifts[None]).reshape(-1, n)
    minus = (x[:, None, :] - shifts[None]).reshape(-1, n)
    hp = curvature_h_unchecked(measure, domain, plus).reshape(m, n)
    hm = curvature_h_unchecked(measure, domain, minus).reshape(m, n)
    return (hp - hm) / (2.0 * step)


def _ascend(measure, domain, x, iters, step):
    """Projected-gradient ascent of ``h`` constrained to ``g = 0``."""
    h = curvature_h_unchecked(measure, domain, x)
    h = np.where(np.isnan(h), -np.inf, h)
    if domain.anchor is not None:
        scale = np.linalg.norm(x - domain.anchor, axis=-1)
    else:
        scale = np.full(x.shape[0], float(measure.sqrt_eigenvalues[0]))
    alpha = 0.05 * np.maximum(scale, 1e-6)
    for _ in range(iters):
        grad = _fd_grad_h(measure, domain, x, step)
        grad = np.nan_to_num(grad)
        Dg = domain.gradient(x)
        nrm2 = np.maximum(np.sum(Dg * Dg, axis=-1), 1e-300)
        tang = grad - (np.sum(grad * Dg, axis=-1) / nrm2)[:, None] * Dg
        tn = np.linalg.norm(tang, axis=-1)
        move = tn > 0
        direction = np.where(move[:, None], tang / np.where(move, tn, 1.0)[:, None], 0.0)
        trial = _retract(domain, x + alpha[:, None] * direction)
        ht = curvature_h_unchecked(measure, domain, trial)
        on_bdry = np.abs(domain.value(trial)) <= 1e-10
        accept = move & on_bdry & np.isfinite(ht) & (ht > h)
        x = np.where(accept[:, None], trial, x)
        h = np.where(accept, ht, h)
        alpha = np.where(accept, alpha * 1.5, alpha * 0.5)
    return x, h


def constants_ABC(measure, domain, config: SamplerConfig | None = None, rng=None) -> CurvatureReport:
    """Sampled lower-bound estimates of A, B (capped field) and C (sup of h).

    The band suprema ``a``, ``b`` are taken over the same sample, so the
    reported values always satisfy ``A <= a`` and ``B <= b + 3 a^2 / delta``.
    """
    config = config or SamplerConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    n = domain.dim
    lam = measure.eigenvalues[:n]
    sq = np.sqrt(lam)
    delta = domain.band_delta
    cap = SmoothCap(delta)

    boundary, (inside, outside) = sample_boundary(measure, domain, rng, config.n_starts,
                                                  config.box_halfwidth)
    band = np.concatenate([boundary, _band_points(domain, rng, inside, outside, delta)])

    gb = domain.value(band)
    Dg = domain.gradient(band)
    D2g = domain.hessian(band)
    grad_norm = np.linalg.norm(sq * Dg, axis=-1)
    if np.any(np.linalg.norm(sq * domain.gradient(boundary), axis=-1) < DEGENERATE_THRESHOLD):
        raise DegenerateGradient("degenerate gradient at a sampled boundary point")
    hs_norm = np.linalg.norm(sq[:, None] * D2g * sq[None, :], axis=(-2, -1))
    a = float(np.max(grad_norm))
    b = float(np.max(hs_norm))

    in_o = gb <= 0.0
    _, Dgt, D2gt = smooth_cap_apply(cap, gb[in_o], Dg[in_o], D2g[in_o])
    A = float(np.max(np.linalg.norm(sq * Dgt, axis=-1)))
    B = float(np.max(np.linalg.norm(sq[:, None] * D2gt * sq[None, :], axis=(-2, -1))))

    h0 = curvature_h(measure, domain, boundary, boundary_tol=1e-10)
    C = float(np.max(h0))
    iters = 0
    if config.ascent_iters > 0 and config.ascent_starts > 0:
        top = np.argsort(h0)[::-1][: config.ascent_starts]
        _, h_best = _ascend(measure, domain, boundary[top], config.ascent_iters, config.fd_step)
        C = max(C, float(np.max(h_best)))
        iters = config.ascent_iters

    return CurvatureReport(A=A, B=B, C=C, a=a, b=b, delta=delta,
                           sample_count=int(band.shape[0]), boundary_count=int(boundary.shape[0]),
                           ascent_iterations=iters)
