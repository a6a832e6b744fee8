import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import multivariate_normal, norm

from oulab.errors import DimensionMismatch, DimensionTooLarge, NonPositiveEigenvalue, NotSorted
from oulab.spectral import cm_norm, density, inverse_pi_sq, make_measure, measure_from_spec, quadrature

spectra = st.lists(st.floats(0.05, 5.0), min_size=1, max_size=3).map(lambda v: sorted(v, reverse=True))


def test_single_eigenvalue_trace():
    assert make_measure([1.0]).trace == 1.0


def test_inverse_square_trace_tends_to_one_sixth():
    # oracle: partial sums of 1/k^2 against pi^2/6
    for n in (10, 100, 1000):
        m = inverse_pi_sq(n)
        k = np.arange(1, n + 1)
        assert m.trace == pytest.approx(np.sum(1.0 / k**2) / np.pi**2, rel=1e-14)
        assert m.full_trace == pytest.approx(1.0 / 6.0, rel=1e-12)
    assert 1.0 / 6.0 - inverse_pi_sq(1000).trace < 1.1e-4


@pytest.mark.parametrize("bad, exc", [([0.5, 1.0], NotSorted), ([1.0, 0.0], NonPositiveEigenvalue),
                                      ([], NonPositiveEigenvalue), ([-1.0], NonPositiveEigenvalue)])
def test_invalid_spectra(bad, exc):
    with pytest.raises(exc):
        make_measure(bad)


def test_density_values():
    m1 = make_measure([1.0])
    assert density(m1, [0.0]) == pytest.approx(norm.pdf(0.0), rel=1e-14)
    assert density(m1, [0.0]) / density(m1, [1.0]) == pytest.approx(np.exp(0.5), rel=1e-14)
    assert density(make_measure([1.0, 1.0]), [0.0, 0.0]) == pytest.approx(1.0 / (2 * np.pi), rel=1e-14)


def test_density_matches_scipy(rng):
    lam = np.array([2.0, 0.7, 0.1])
    x = rng.standard_normal((20, 3))
    ref = multivariate_normal(mean=np.zeros(3), cov=np.diag(lam)).pdf(x)
    np.testing.assert_allclose(density(make_measure(lam), x), ref, rtol=1e-12)


def test_density_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        density(make_measure([1.0, 0.5]), [0.0, 0.0, 0.0])


def test_cm_norm_examples():
    assert cm_norm(make_measure([1.0]), [1.0]) == pytest.approx(1.0)
    assert cm_norm(make_measure([4.0]), [2.0]) == pytest.approx(1.0)
    assert cm_norm(make_measure([1.0, 0.25]), [0.0, 1.0]) == pytest.approx(2.0)
    with pytest.raises(DimensionMismatch):
        cm_norm(make_measure([1.0]), [1.0, 2.0])


def test_quadrature_moments():
    q = quadrature(make_measure([1.0]), 1, 2)
    assert q.integrate(lambda x: x[:, 0] ** 2) == pytest.approx(1.0, abs=1e-12)
    q = quadrature(make_measure([1.0]), 1, 3)
    assert q.integrate(lambda x: x[:, 0] ** 4) == pytest.approx(3.0, abs=1e-12)
    q = quadrature(make_measure([1.0, 0.5]), 2, 4)
    assert q.integrate(lambda x: x[:, 0] * x[:, 1]) == pytest.approx(0.0, abs=1e-14)


def test_quadrature_rejects_large_dimension():
    with pytest.raises(DimensionTooLarge):
        quadrature(make_measure([1.0] * 4), 4, 3)


def test_measure_from_spec():
    assert measure_from_spec({"eigenvalues": [2.0, 1.0]}).trace == 3.0
    assert measure_from_spec({"generator": "inverse_pi_sq", "n": 5}).dim == 5


def test_truncate_keeps_tail():
    m = make_measure([1.0, 0.5, 0.25])
    t = m.truncate(1)
    assert t.dim == 1 and t.full_trace == pytest.approx(m.full_trace)


@given(spectra, st.integers(3, 6))
def test_quadrature_reproduces_gaussian_moments(lam, level):
    m = make_measure(lam)
    q = quadrature(m, m.dim, level)
    pts, w = q.points()
    assert np.sum(w) == pytest.approx(1.0, abs=1e-12)
    for k in range(m.dim):
        assert w @ pts[:, k] ** 2 == pytest.approx(lam[k], rel=1e-10)
        assert w @ pts[:, k] ** 4 == pytest.approx(3 * lam[k] ** 2, rel=1e-10)


@given(spectra, st.data())
def test_cm_norm_equivalence(lam, data):
    m = make_measure(lam)
    h = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=m.dim, max_size=m.dim)))
    cm2 = cm_norm(m, h) ** 2
    e2 = h @ h
    assert cm2 * min(lam) <= e2 * (1 + 1e-12) + 1e-300
    assert e2 <= cm2 * max(lam) * (1 + 1e-12) + 1e-300


@given(spectra, st.data())
def test_density_is_even(lam, data):
    m = make_measure(lam)
    x = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=m.dim, max_size=m.dim)))
    assert density(m, x) == density(m, -x)


@given(spectra)
def test_trace_is_sum(lam):
    m = make_measure(lam)
    assert m.trace == pytest.approx(float(np.sum(lam)), rel=1e-14)
