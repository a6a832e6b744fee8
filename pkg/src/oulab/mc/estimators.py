"""Monte Carlo estimators built on :func:`simulate_exits`."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from ..errors import StartOutsideDomain
from ..geometry.domains import WholeSpace
from .engine import ExitEnsemble, PathConfig, as_field, simulate_exits

__all__ = [
    "MCEstimate",
    "killed_semigroup",
    "resolvent_mc",
    "kernel_g",
    "kernel_check",
    "cylindrical_convergence",
]

T_MAX_FACTOR = 12.0


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    tail_bound: float = 0.0
    paths: int = 0
    censored: int = 0
    horizon: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def killed_semigroup(measure, domain, F, t, x, config: PathConfig):
    """``E[F(X_t) 1{tau >= t}]`` with exits checked at multiples of ``h``.

    Returns ``(estimate, stderr)``.
    """
    if config.T_max is not None and t > config.T_max:
        raise ValueError("t exceeds T_max")
    Fn, _ = as_field(F)
    ens = simulate_exits(measure, domain, x, config, T=t, observe=(t,))
    alive, states = ens.observations[t]
    vals = np.zeros(alive.size)
    if np.any(alive):
        vals[alive] = Fn(states[alive])
    return ExitEnsemble.summary(vals)


def resolvent_mc(measure, domain, F, lam, x, config: PathConfig, return_ensemble=False):
    """``U(x) = E int_0^tau e^{-lam t} F(X_t) dt`` truncated at ``T_max``.

    ``T_max`` defaults to ``12/lam``.  The truncation tail
    ``sup|F| e^{-lam T_max} / lam`` is reported separately; when ``F`` carries
    no ``sup`` attribute the largest value seen along the paths is used.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    T = config.T_max if config.T_max is not None else T_MAX_FACTOR / lam
    T = config.h * round(T / config.h)
    Fn, sup = as_field(F)
    seen = [0.0]

    def tracked(pts):
        v = Fn(pts)
        if v.size:
            seen[0] = max(seen[0], float(np.max(np.abs(v))))
        return v

    ens = simulate_exits(measure, domain, x, config, T=T, F=tracked if sup is None else Fn,
                         discount=lam)
    sup = seen[0] if sup is None else sup
    est, se = ens.mean, ens.stderr
    res = MCEstimate(estimate=est, stderr=se, tail_bound=float(sup * np.exp(-lam * T) / lam),
                     paths=ens.paths, censored=int(np.count_nonzero(ens.censored)), horizon=T)
    return (res, ens) if return_ensemble else res


def kernel_g(t, s):
    """``e^{-(t+s)/2} (e^{min(t,s)} - 1)``."""
    t, s = np.asarray(t, float), np.asarray(s, float)
    return np.exp(-0.5 * (t + s)) * np.expm1(np.minimum(t, s))


def kernel_check(measure, T, times, config: PathConfig, x=None):
    """Empirical covariance of ``Y(t) = X(t) - e^{-t/2} x`` against ``lambda_k g(t, s)``.

    Returns a dict with the maximal deviation in standard-error units and the
    table of ``(k, t, s, empirical, analytic, stderr)`` rows.
    """
    times = sorted(float(t) for t in times)
    if T <= 0 or times[-1] > T:
        raise ValueError("need 0 < times <= T")
    n = config.n or measure.dim
    x0 = np.zeros(n) if x is None else np.asarray(x, dtype=float)[:n]
    ens = simulate_exits(measure, WholeSpace(n), x0, replace(config, n=n), T=T, observe=times)
    Y = {t: ens.observations[t][1] - np.exp(-0.5 * t) * x0 for t in times}
    rows = []
    worst = 0.0
    lam = measure.eigenvalues[:n]
    for k in range(n):
        for i, t in enumerate(times):
            for s in times[i:]:
                a, b = Y[t][:, k], Y[s][:, k]
                prod = (a - a.mean()) * (b - b.mean())
                emp = float(np.sum(prod) / (prod.size - 1))
                se = float(np.std(prod, ddof=1) / np.sqrt(prod.size))
                ana = float(lam[k] * kernel_g(t, s))
                dev = abs(emp - ana) / se
                worst = max(worst, dev)
                rows.append({"k": k + 1, "t": t, "s": s, "empirical": emp, "analytic": ana,
                             "stderr": se, "deviation": dev})
    return {"max_deviation": worst, "rows": rows}


def cylindrical_convergence(measure, domain, F, lam, x, dims, config: PathConfig):
    """``U_n(x)`` for each ``n`` in ``dims`` under common random numbers.

    ``domain`` maps ``n`` to the truncated domain ``G o P_n``.  Rows carry
    ``error`` instead of an estimate when ``x`` falls outside a truncation.
    """
    dims = list(dims)
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise ValueError("dims must be increasing")
    width = max(dims)
    rows = []
    for n in dims:
        cfg = replace(config, n=n, stream_dim=width)
        sub = measure.truncate(n) if measure.dim > n else measure
        try:
            est = resolvent_mc(sub, domain(n), F, lam, x, cfg)
        except StartOutsideDomain as exc:
            rows.append({"n": n, "error": str(exc)})
            continue
        rows.append({"n": n, **est.to_dict()})
    return rows
