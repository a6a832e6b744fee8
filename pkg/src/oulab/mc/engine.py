"""Exact-transition simulation of the OU process with exit monitoring.

``dX = -X/2 dt + Q^{1/2} dW`` has the exact transition

    X(t+h) = e^{-h/2} X(t) + sqrt(lambda_k (1 - e^{-h})) Z.

Paths are grouped in blocks of ``config.block``.  Block ``b`` owns a Philox
stream keyed by ``(seed, b)``, so results never depend on how blocks are
scheduled.  With ``crn=True`` every step draws a full ``(block, stream_dim)``
array of normals whether or not the paths are still alive: the noise seen by
path ``p`` at step ``j`` then depends only on ``(seed, p, j)``, which gives
common random numbers across domains and truncation dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import StartOutsideDomain

__all__ = ["PathConfig", "ExitEnsemble", "ou_step", "block_rng", "simulate_exits", "as_field"]

_UNIFORM_TAG = 1 << 63


@dataclass(frozen=True)
class PathConfig:
    """Simulation parameters.

    Parameters
    ----------
    h : float
        Time step; exits are checked at multiples of ``h``.
    T_max : float, optional
        Horizon; resolvent estimates default to ``12 / lambda``.
    paths : int
    seed : int
    n : int, optional
        Truncation dimension; defaults to the domain dimension.
    stream_dim : int, optional
        Width of the noise stream (``>= n``); equal widths give common random
        numbers across different ``n``.
    bridge : bool
        Kill surviving paths with the Brownian-bridge crossing probability of
        the frozen-coefficient step.
    block : int
        Paths per random stream.
    crn : bool
        Draw noise for every path of a block at every step (common random
        numbers).  When False only alive paths consume noise: much cheaper
        once most paths have exited, still deterministic, but comparisons
        across configurations lose their coupling.
    dump : str, optional
        Path of a binary per-path dump (index, tau, integral).
    """

    h: float = 1e-3
    T_max: float | None = None
    paths: int = 10_000
    seed: int = 0
    n: int | None = None
    stream_dim: int | None = None
    bridge: bool = False
    block: int = 4096
    crn: bool = True
    dump: str | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.T_max is not None and self.T_max < self.h:
            raise ValueError("T_max must be at least h")
        if self.paths < 1:
            raise ValueError("need at least one path")
        if self.block < 1:
            raise ValueError("block must be positive")


@dataclass
class ExitEnsemble:
    """Per-path results of one simulation.

    ``tau`` is the first monitoring time with ``G > 0``; censored paths carry
    ``tau = T`` and ``censored = True``.
    """

    tau: np.ndarray
    censored: np.ndarray
    integral: np.ndarray | None
    horizon: float
    observations: dict = field(default_factory=dict)

    @property
    def paths(self) -> int:
        return int(self.tau.size)

    @staticmethod
    def summary(values):
        values = np.asarray(values, dtype=float)
        mean = float(np.mean(values))
        if values.size < 2:
            return mean, 0.0
        return mean, float(np.std(values, ddof=1) / np.sqrt(values.size))

    @property
    def mean(self) -> float:
        return self.summary(self.integral)[0]

    @property
    def stderr(self) -> float:
        return self.summary(self.integral)[1]

    def dump(self, path):
        """Binary records ``(index u8, tau f8, integral f8)``, little endian."""
        rec = np.zeros(self.paths, dtype=[("index", "<u8"), ("tau", "<f8"), ("integral", "<f8")])
        rec["index"] = np.arange(self.paths)
        rec["tau"] = self.tau
        rec["integral"] = self.integral if self.integral is not None else np.nan
        rec.tofile(path)


def ou_step(measure, x, h, noise):
    """Exact OU transition over a step ``h``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    lam = measure.eigenvalues[:n]
    decay = np.exp(-0.5 * h)
    return decay * x + np.sqrt(lam * -np.expm1(-h)) * np.asarray(noise, dtype=float)


def block_rng(seed, block, uniform=False):
    """Counter-based generator for one block of paths."""
    key1 = int(block) | (_UNIFORM_TAG if uniform else 0)
    return np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, key1]))


def as_field(F):
    """Wrap numbers as constant fields; returns ``(callable, sup or None)``."""
    if F is None:
        return None, None
    if callable(F):
        return F, getattr(F, "sup", None)
    v = float(F)
    return (lambda x: np.full(x.shape[0], v)), abs(v)


def _steps(T, h):
    m = int(round(T / h))
    if abs(m * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon {T} is not a multiple of h={h}")
    return m


def simulate_exits(measure, domain, x, config: PathConfig, T, F=None, discount=0.0,
                   observe=()):
    """Simulate paths from ``x`` until exit or ``T``.

    Parameters
    ----------
    F : callable, optional
        Integrand; the per-path trapezoid of ``e^{-discount t} F(X_t)`` on
        ``[0, tau ^ T]`` is returned in ``integral``.
    observe : sequence of float
        Times (multiples of ``h``) at which the states and the alive flags
        are recorded in ``observations[t] = (alive, states)``.

    Raises
    ------
    StartOutsideDomain
        If ``g(x) >= 0``.
    """
    n = config.n or domain.dim
    if domain.dim != n:
        raise ValueError(f"domain dimension {domain.dim} differs from n={n}")
    sd = config.stream_dim or n
    if sd < n:
        raise ValueError("stream_dim must be >= n")
    x0 = np.zeros(n)
    xs = np.asarray(x, dtype=float).ravel()[:n]
    x0[: xs.size] = xs
    if not domain.value(x0[None, :])[0] < 0:
        raise StartOutsideDomain(f"start point has g = {domain.value(x0[None, :])[0]:.6g} >= 0")

    h = config.h
    m = _steps(T, h)
    obs_steps = {_steps(t, h): t for t in observe}
    lam = measure.eigenvalues[:n]
    decay = np.exp(-0.5 * h)
    scale = np.sqrt(lam * -np.expm1(-h))
    var_h = -np.expm1(-h)
    Fn, _ = as_field(F)
    P, B = config.paths, config.block

    tau = np.full(P, float(m * h))
    censored = np.ones(P, bool)
    integral = np.zeros(P) if Fn is not None else None
    observations = {t: (np.zeros(P, bool), np.zeros((P, n))) for t in obs_steps.values()}

    g0 = float(domain.value(x0[None, :])[0])
    half_h = 0.5 * h
    for b, start in enumerate(range(0, P, B)):
        size = min(B, P - start)
        rng = block_rng(config.seed, b)
        urng = block_rng(config.seed, b, uniform=True) if config.bridge else None
        noise = np.empty((size, sd))
        # compact state of the alive paths; results are written on exit
        idx = np.arange(start, start + size)
        xa = np.broadcast_to(x0, (size, n)).copy()
        ga = np.full(size, g0)
        if Fn is not None:
            acc = np.zeros(size)
            prev = Fn(xa)
        if 0 in obs_steps:
            al, st = observations[obs_steps[0]]
            al[idx] = True
            st[idx] = xa
        for j in range(1, m + 1):
            if idx.size == 0:
                break
            if config.crn:
                rng.standard_normal(out=noise)
                local = idx - start
                z = noise[local, :n]
                u = urng.random(size)[local] if urng is not None else None
            else:
                z = rng.standard_normal((idx.size, sd))[:, :n]
                u = urng.random(idx.size) if urng is not None else None
            xa = decay * xa + scale * z
            g = domain.value(xa)
            out = g > 0
            if u is not None:
                Dg = domain.gradient(xa)
                q = (Dg * Dg) @ lam * var_h
                with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                    # NaN compares False: degenerate gradients never kill
                    out |= u < np.exp(-2.0 * ga * g / q)
            t = j * h
            if Fn is not None:
                cur = Fn(xa) * np.exp(-discount * t)
                acc += half_h * (prev + cur)
            if j in obs_steps:
                al, st = observations[obs_steps[j]]
                keep = ~out
                al[idx[keep]] = True
                st[idx[keep]] = xa[keep]
            if out.any():
                dead = idx[out]
                tau[dead] = t
                censored[dead] = False
                live = ~out
                if Fn is not None:
                    integral[dead] = acc[out]
                    acc, prev = acc[live], cur[live]
                idx, xa, ga = idx[live], xa[live], g[live]
            else:
                ga = g
                if Fn is not None:
                    prev = cur
        if Fn is not None and idx.size:
            integral[idx] = acc
    ens = ExitEnsemble(tau=tau, censored=censored, integral=integral, horizon=m * h,
                       observations=observations)
    if config.dump:
        ens.dump(config.dump)
    return ens
