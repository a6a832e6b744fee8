"""Closed-form admissibility criteria for the example domains.

Half-spaces are always admissible.  For balls ``B(x0, r)`` the curvature
supremum stays bounded across truncations when ``r(||x0|| + r)`` is below
``sum_{k>=2} lambda_k`` and blows up when ``r^2 > Tr Q``; between the two
thresholds the criteria say nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import HypothesisViolated, NotOnBoundary, RadiusTooSmall
from .domains import IntegralFunctional, Rational1D, simpson_weights

__all__ = [
    "ADMISSIBLE",
    "INADMISSIBLE",
    "UNDETERMINED",
    "sphere_admissibility",
    "sphere_blowup_witness",
    "ellipsoid_threshold",
    "ellipsoid_admissibility",
    "graph_domain_h",
    "IntegralDiagnostics",
    "check_integral_hypotheses",
    "integral_functional_h",
    "integral_functional_domain",
    "partial_variance_profile",
]

ADMISSIBLE = "admissible"
INADMISSIBLE = "inadmissible"
UNDETERMINED = "undetermined"


def sphere_admissibility(measure, center, r) -> str:
    """Classify the ball ``B(center, r)`` by the two closed-form criteria.

    Sums use ``measure.full_trace`` so a known spectral tail is included.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    x0 = float(np.linalg.norm(np.asarray(center, dtype=float)))
    tail_beyond_first = measure.full_trace - float(measure.eigenvalues[0])
    if r * (x0 + r) < tail_beyond_first:
        return ADMISSIBLE
    if r * r > measure.full_trace:
        return INADMISSIBLE
    return UNDETERMINED


def sphere_blowup_witness(measure, center, r, n) -> float:
    """Value of ``H_n`` at the boundary point ``x0 + r_n e_n``.

    ``(r_n^2 + r_n x0_n - sum_{k<n} lambda_k) / (2 lambda_n r_n^2)`` with
    ``r_n^2 = r^2 - sum_{k>n} x0_k^2``; ``n`` is 1-based.
    """
    x0 = np.asarray(center, dtype=float).ravel()
    if n < 1 or n > measure.dim:
        raise ValueError(f"n={n} outside 1..{measure.dim}")
    tail = float(np.sum(x0[n:] ** 2))
    rn2 = r * r - tail
    if rn2 <= 0:
        raise RadiusTooSmall(f"r^2 = {r * r} does not exceed the centre tail {tail}")
    rn = np.sqrt(rn2)
    x0n = x0[n - 1] if x0.size >= n else 0.0
    lam = measure.eigenvalues
    head = float(np.sum(lam[: n - 1]))
    return float((rn2 + rn * x0n - head) / (2.0 * lam[n - 1] * rn2))


def ellipsoid_threshold(measure, t, center=None):
    """``(kbar, sum_{k != kbar} lambda_k t_k, tail_bound)`` over the truncation.

    ``kbar`` is 0-based.  The truncated sum is a lower bound of the full one;
    ``tail_bound = max(t) * tail_trace`` bounds what is missing.
    """
    n = measure.dim
    t = np.asarray(t, dtype=float)[:n]
    prod = measure.eigenvalues * t
    kbar = int(np.argmax(prod))
    threshold = float(np.sum(prod) - prod[kbar])
    return kbar, threshold, float(np.max(t) * measure.tail_trace)


def ellipsoid_admissibility(measure, t, center, r) -> bool:
    """True iff ``r(||T^{1/2} x0|| + r) < sum_{k != kbar} lambda_k t_k``.

    Uses the truncated sum, which can only make the verdict more cautious.
    """
    n = measure.dim
    t = np.asarray(t, dtype=float)
    x0 = np.asarray(center, dtype=float)
    m = min(t.size, x0.size)
    weighted = float(np.sqrt(np.sum(t[:m] * x0[:m] ** 2)))
    _, threshold, _ = ellipsoid_threshold(measure, t[:n] if t.size >= n else t)
    return bool(r * (weighted + r) < threshold)


def graph_domain_h(measure, phi, k, x, check_boundary=True, tol=1e-8):
    """Curvature functional of ``{x_k < phi(x~_k)}`` from derivatives of ``phi``.

    ``k`` is 0-based.  The second fraction enters with a minus sign, as the
    chain rule on ``g = x_k - phi`` gives ``D^2 g = -D^2 phi``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    others = np.array([j for j in range(n) if j != k], dtype=int)
    y = x[..., others]
    val = phi.value(y)
    if check_boundary and np.any(np.abs(x[..., k] - val) > tol):
        raise NotOnBoundary("x_k differs from phi(x~_k)")
    grad = phi.gradient(y)
    hess = phi.hessian(y)
    lam = measure.eigenvalues[:n]
    lo = lam[others]
    num1 = val + np.sum(lo * np.diagonal(hess, axis1=-2, axis2=-1) - y * grad, axis=-1)
    den = lam[k] + np.sum(lo * grad**2, axis=-1)
    lg = lo * grad
    num2 = np.einsum("...h,...hl,...l->...", lg, hess, lg)
    return num1 / den - num2 / den**2


# -- the L^2(0,1) integral functional --------------------------------------

@dataclass
class IntegralDiagnostics:
    """Checks attached to an integral-functional domain.

    ``gradient_lower_bound`` is ``8 a^2 / pi^4``: the first sine coefficient of
    ``g'(x(.))`` is at least ``2 sqrt(2) a / pi`` in modulus.  ``h_bound`` is
    ``pi^4 (max(alpha r + beta, 0) + max(-inf g'', 0)/6) / (8 a^2)``.
    """

    a: float
    alpha: float
    beta: float
    r: float
    gradient_lower_bound: float
    h_bound: float
    min_sampled_gradient_sq: float
    gradient_bound_holds: bool
    f_n_sup_error: float
    f_n_integral: float
    inner_bound_max_excess: float
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        from dataclasses import asdict

        return asdict(self)


def check_integral_hypotheses(g1d, a, alpha, beta, span=50.0, points=20001):
    """Sample ``|g'| >= a`` and ``xi g'(xi) <= alpha g(xi) + beta`` on ``[-span, span]``.

    Returns ``inf g''`` over the sample.
    """
    xi = np.linspace(-span, span, points)
    d1 = g1d.d1(xi)
    if np.min(np.abs(d1)) < a * (1.0 - 1e-12):
        raise HypothesisViolated(f"min |g'| = {np.min(np.abs(d1)):.6g} < a = {a}")
    excess = xi * d1 - alpha * g1d(xi) - beta
    if np.max(excess) > 1e-9 * max(1.0, np.max(np.abs(xi * d1))):
        raise HypothesisViolated(f"xi g' <= alpha g + beta fails by {np.max(excess):.3e}")
    return float(np.min(g1d.d2(xi)))


def partial_variance_profile(s, n):
    """``f_n(s) = 2 sum_{k<=n} lambda_k sin^2(k pi s)`` for ``lambda_k = 1/(pi k)^2``."""
    k = np.arange(1, n + 1)
    lam = 1.0 / (np.pi * k) ** 2
    return 2.0 * np.sin(np.pi * np.outer(s, k)) ** 2 @ lam


def integral_functional_h(measure, domain: IntegralFunctional, x):
    """``H_n`` written through ``phi_n = D_H G_n`` and ``f_n``.

    ``(1/|phi|_H^2) ( int g''(x(s)) (phi(s)^2/|phi|_H^2 - f_n(s)) ds + int g'(x(s)) x(s) ds )``
    """
    x = np.asarray(x, dtype=float)
    n = domain.dim
    lam = measure.eigenvalues[:n]
    path = domain.path(x)
    coef = (domain.g1d.d1(path) * domain.w) @ domain.E
    phi_norm2 = np.sum(lam * coef**2, axis=-1)
    phi = (lam * coef) @ domain.E.T
    fn = np.sum(lam * domain.E**2, axis=-1)
    g2 = domain.g1d.d2(path)
    first = (g2 * (phi**2 / phi_norm2[..., None] - fn)) @ domain.w
    second = (domain.g1d.d1(path) * path) @ domain.w
    return (first + second) / phi_norm2


def integral_functional_domain(measure, g1d, r, n, a, alpha, beta, band_delta=1.0,
                               rng=None, samples=256):
    """Build ``G_n`` and run the diagnostics of the integral-functional example.

    Raises
    ------
    HypothesisViolated
        When sampled ``|g'| < a`` or the growth condition fails.
    """
    if not isinstance(g1d, Rational1D):
        g1d = Rational1D(*g1d) if isinstance(g1d, tuple) else g1d
    inf_g2 = check_integral_hypotheses(g1d, a, alpha, beta)
    domain = IntegralFunctional(g1d, r, n, band_delta=band_delta)
    rng = rng if rng is not None else np.random.default_rng(0)
    lam = measure.eigenvalues[:n]

    pts = rng.standard_normal((samples, n)) * np.sqrt(lam) * 3.0
    grad = domain.gradient(pts)
    dh2 = np.sum(lam * grad**2, axis=-1)
    lower = 8.0 * a * a / np.pi**4
    h_bound = np.pi**4 * (max(alpha * r + beta, 0.0) + max(-inf_g2, 0.0) / 6.0) / (8.0 * a * a)

    s, w = simpson_weights(IntegralFunctional.PANELS)
    fn = partial_variance_profile(s, n)
    f_lim = s - s * s
    coeffs = rng.standard_normal((samples, n))
    phi = (np.sqrt(2.0) * lam * coeffs) @ np.sin(np.pi * np.outer(s, np.arange(1, n + 1))).T
    phi_h2 = np.sum(lam * coeffs**2, axis=-1)
    excess = np.max(phi**2 / phi_h2[:, None] - fn[None, :])

    diag = IntegralDiagnostics(
        a=a, alpha=alpha, beta=beta, r=r,
        gradient_lower_bound=lower,
        h_bound=float(h_bound),
        min_sampled_gradient_sq=float(np.min(dh2)),
        gradient_bound_holds=bool(np.min(dh2) >= lower * (1.0 - 1e-9)),
        f_n_sup_error=float(np.max(np.abs(fn - f_lim))),
        f_n_integral=float(fn @ w),
        inner_bound_max_excess=float(excess),
        extra={"inf_g2": inf_g2},
    )
    return domain, diag
