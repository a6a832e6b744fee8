"""Centered Gaussian measures with diagonal covariance.

The covariance is ``Q = diag(lambda_1, ..., lambda_n)`` with a non-increasing,
strictly positive spectrum.  The truncation dimension ``n`` is always explicit;
when the spectrum is a truncation of a known infinite sequence, the remainder
of the trace can be carried along in ``tail_trace`` so that criteria involving
``Tr Q`` use the full value.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import polygamma

from .errors import DimensionMismatch, DimensionTooLarge, NonPositiveEigenvalue, NotSorted

__all__ = [
    "SpectralGaussian",
    "QuadratureGrid",
    "make_measure",
    "inverse_pi_sq",
    "measure_from_spec",
    "density",
    "cm_norm",
    "quadrature",
]

MAX_TENSOR_DIM = 3


@dataclass(frozen=True)
class SpectralGaussian:
    eigenvalues: np.ndarray
    tail_trace: float = 0.0
    trace: float = field(init=False)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "trace", float(np.sum(lam)))

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def full_trace(self) -> float:
        """Trace including the known remainder beyond the truncation."""
        return self.trace + self.tail_trace

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    def truncate(self, n: int) -> "SpectralGaussian":
        """Projection onto the first ``n`` eigendirections."""
        if not 1 <= n <= self.dim:
            raise DimensionMismatch(f"cannot truncate a {self.dim}-dimensional measure to n={n}")
        rest = float(np.sum(self.eigenvalues[n:])) + self.tail_trace
        return SpectralGaussian(self.eigenvalues[:n], tail_trace=rest)

    def density(self, x) -> np.ndarray:
        return density(self, x)

    def cm_norm(self, h) -> np.ndarray:
        return cm_norm(self, h)

    def quadrature(self, level: int) -> "QuadratureGrid":
        return quadrature(self, self.dim, level)


def make_measure(eigenvalues, tail_trace: float = 0.0) -> SpectralGaussian:
    """Validate a spectrum and wrap it as a :class:`SpectralGaussian`.

    Raises
    ------
    NonPositiveEigenvalue
        If any entry is not strictly positive (or the list is empty).
    NotSorted
        If the sequence increases anywhere.
    """
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    if lam.ndim != 1 or lam.size == 0:
        raise NonPositiveEigenvalue("eigenvalue list must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise NonPositiveEigenvalue(f"eigenvalues must be finite and > 0, got {lam.tolist()}")
    if np.any(np.diff(lam) > 0.0):
        raise NotSorted("eigenvalues must be non-increasing")
    if tail_trace < 0.0:
        raise NonPositiveEigenvalue("tail_trace must be >= 0")
    return SpectralGaussian(lam, tail_trace=float(tail_trace))


def inverse_pi_sq(n: int) -> SpectralGaussian:
    """Covariance of the Brownian bridge on (0, 1): ``lambda_k = 1/(pi^2 k^2)``.

    The tail ``sum_{k>n} lambda_k = psi'(n+1)/pi^2`` is attached so that
    ``full_trace`` equals 1/6 up to rounding.
    """
    if n < 1:
        raise DimensionMismatch("n must be >= 1")
    k = np.arange(1, n + 1, dtype=float)
    lam = 1.0 / (np.pi**2 * k**2)
    tail = float(polygamma(1, n + 1)) / np.pi**2
    return make_measure(lam, tail_trace=tail)


_GENERATORS = {"inverse_pi_sq": inverse_pi_sq}


def measure_from_spec(spec: dict) -> SpectralGaussian:
    """Build a measure from a config mapping.

    Either ``{"eigenvalues": [...]}`` or ``{"generator": name, "n": int}``.
    """
    if "eigenvalues" in spec:
        return make_measure(spec["eigenvalues"], tail_trace=spec.get("tail_trace", 0.0))
    gen = _GENERATORS[spec["generator"]]
    return gen(int(spec["n"]))


def _check_dim(measure: SpectralGaussian, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (measure.dim,):
        raise DimensionMismatch(f"expected trailing dimension {measure.dim}, got shape {x.shape}")
    return x


def density(measure: SpectralGaussian, x) -> np.ndarray:
    """Lebesgue density of the measure at ``x`` (shape ``(..., n)``)."""
    x = _check_dim(measure, x)
    lam = measure.eigenvalues
    log_norm = -0.5 * (measure.dim * np.log(2.0 * np.pi) + np.sum(np.log(lam)))
    return np.exp(log_norm - 0.5 * np.sum(x * x / lam, axis=-1))


def cm_norm(measure: SpectralGaussian, h) -> np.ndarray:
    """Cameron-Martin norm ``|Q^{-1/2} h|``."""
    h = _check_dim(measure, h)
    return np.sqrt(np.sum(h * h / measure.eigenvalues, axis=-1))


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor Gauss-Hermite rule for integrals against the measure.

    ``nodes[k]`` and ``weights[k]`` are the 1-D rule for axis ``k``; weights
    are normalised to sum to one.
    """

    dim: int
    nodes: tuple
    weights: tuple

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened tensor grid: ``(points (m, n), weights (m,))``."""
        mesh = np.meshgrid(*self.nodes, indexing="ij")
        wmesh = np.meshgrid(*self.weights, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        w = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
        return pts, w

    def integrate(self, func) -> float:
        """``func`` takes an ``(m, n)`` array and returns ``(m,)`` values."""
        pts, w = self.points()
        return float(np.dot(w, func(pts)))


def quadrature(measure: SpectralGaussian, n: int, level: int) -> QuadratureGrid:
    """Per-axis Gauss-Hermite rule with ``level`` points, scaled by sqrt(lambda_k).

    Exact for polynomials of per-axis degree ``<= 2*level - 1``.
    """
    if n > MAX_TENSOR_DIM:
        raise DimensionTooLarge(f"tensor quadrature supports n <= {MAX_TENSOR_DIM}, got {n}")
    if n < 1 or n > measure.dim:
        raise DimensionMismatch(f"n={n} incompatible with measure of dimension {measure.dim}")
    if level < 2:
        raise ValueError("level must be >= 2")
    z, w = np.polynomial.hermite_e.hermegauss(level)
    w = w / w.sum()
    scale = measure.sqrt_eigenvalues[:n]
    return QuadratureGrid(
        dim=n,
        nodes=tuple(z * s for s in scale),
        weights=tuple(w.copy() for _ in range(n)),
    )
