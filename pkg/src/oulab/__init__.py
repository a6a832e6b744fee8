"""Numerical laboratory for Ornstein-Uhlenbeck Dirichlet problems on Gaussian spaces."""
__version__ = "0.1.0"

from .spectral import SpectralGaussian, inverse_pi_sq, make_measure  # noqa: F401
