import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_bvp
from scipy.linalg import solve_banded
from scipy.stats import kstest, norm

from oulab.errors import StartOutsideDomain
from oulab.geometry import Slab, Sphere, WholeSpace
from oulab.mc import (
    PathConfig,
    block_rng,
    cylindrical_convergence,
    kernel_check,
    kernel_g,
    killed_semigroup,
    ou_step,
    resolvent_mc,
    simulate_exits,
)
from oulab.sources import constant, linear
from oulab.spectral import make_measure

M1 = make_measure([1.0])
M2 = make_measure([1.0, 0.5])
INTERVAL = Sphere([0.0], 1.0, 1)


def survival_oracle(t, x0=0.0, cells=2000, steps=2000):
    """``P(tau > t)`` on (-1, 1) for ``dX = -X/2 dt + dW`` by Crank-Nicolson."""
    x = np.linspace(-1, 1, cells + 1)[1:-1]
    dx = 2.0 / cells
    dt = t / steps
    lo = 0.5 / dx**2 + 0.25 * x / dx
    up = 0.5 / dx**2 - 0.25 * x / dx
    di = -np.ones_like(x) / dx**2

    def banded(theta):
        ab = np.zeros((3, x.size))
        ab[0, 1:] = -theta * dt * up[:-1]
        ab[1] = 1.0 - theta * dt * di
        ab[2, :-1] = -theta * dt * lo[1:]
        return ab

    def apply(v, theta):
        out = v + theta * dt * di * v
        out[1:] += theta * dt * lo[1:] * v[:-1]
        out[:-1] += theta * dt * up[:-1] * v[1:]
        return out

    v = np.ones_like(x)
    for j in range(steps):
        if j < 4:  # implicit Euler start-up damps the corner singularity
            v = solve_banded((1, 1), banded(1.0), v)
        else:
            v = solve_banded((1, 1), banded(0.5), apply(v, 0.5))
    return float(np.interp(x0, x, v))


def resolvent_oracle(lam, x0=0.0):
    def rhs(x, y):
        return np.vstack([y[1], 2.0 * (lam * y[0] + 0.5 * x * y[1] - 1.0)])

    x = np.linspace(-1, 1, 201)
    sol = solve_bvp(rhs, lambda a, b: np.array([a[0], b[0]]), x, np.zeros((2, x.size)), tol=1e-10)
    return float(sol.sol(x0)[0])


# -- transition --------------------------------------------------------------------

def test_ou_step_example():
    h = 2.0 * np.log(2.0)  # decay 1/2, variance 3/4
    assert ou_step(M1, [1.0], h, [0.0])[0] == pytest.approx(0.5)
    assert ou_step(M1, [1.0], h, [1.0])[0] == pytest.approx(0.5 + np.sqrt(0.75))
    assert ou_step(M2, [0.0, 0.0], h, [1.0, 1.0])[1] == pytest.approx(np.sqrt(0.375))


@given(st.floats(1e-4, 2.0), st.floats(1e-4, 2.0), st.floats(0.1, 4.0))
def test_ou_step_semigroup(h1, h2, lam):
    m = make_measure([lam])
    mean = ou_step(m, ou_step(m, [1.0], h1, [0.0]), h2, [0.0])
    assert mean[0] == pytest.approx(ou_step(m, [1.0], h1 + h2, [0.0])[0], rel=1e-12)
    s1 = ou_step(m, [0.0], h1, [1.0])[0]
    s2 = ou_step(m, [0.0], h2, [1.0])[0]
    s12 = ou_step(m, [0.0], h1 + h2, [1.0])[0]
    assert (np.exp(-0.5 * h2) * s1) ** 2 + s2**2 == pytest.approx(s12**2, rel=1e-10)


def test_marginal_is_exact_gaussian():
    cfg = PathConfig(h=0.25, paths=20000, seed=3)
    ens = simulate_exits(M2, WholeSpace(2), [1.0, -1.0], cfg, T=1.0, observe=(1.0,))
    alive, X = ens.observations[1.0]
    assert alive.all()
    for k, (lam, x0) in enumerate(zip(M2.eigenvalues, (1.0, -1.0))):
        z = (X[:, k] - np.exp(-0.5) * x0) / np.sqrt(lam * (1 - np.exp(-1.0)))
        assert kstest(z, norm.cdf).pvalue > 1e-3


def test_kernel_g_values():
    assert kernel_g(1.0, 1.0) == pytest.approx(1 - np.exp(-1), abs=5e-6)
    assert kernel_g(0.0, 3.0) == 0.0
    assert kernel_g(2.0, 1.0) == kernel_g(1.0, 2.0)


def test_kernel_check_small():
    out = kernel_check(M2, 1.0, [0.5, 1.0], PathConfig(h=0.25, paths=20000, seed=1))
    assert out["max_deviation"] < 4.0
    assert len(out["rows"]) == 6


# -- exits and estimators -----------------------------------------------------------

def test_start_outside_raises():
    with pytest.raises(StartOutsideDomain):
        simulate_exits(M1, INTERVAL, [1.0], PathConfig(paths=4), T=0.01)


def test_survival_matches_pde_oracle():
    t = 0.5
    ref = survival_oracle(t)
    est, se = killed_semigroup(M1, INTERVAL, 1.0, t, [0.0],
                               PathConfig(h=1e-3, paths=20000, seed=11, bridge=True, crn=False))
    assert abs(est - ref) <= 3 * se + 2e-3


def test_bridge_reduces_monitoring_bias():
    t, ref = 0.5, survival_oracle(0.5)
    base = dict(h=0.05, paths=20000, seed=5, crn=False)
    plain, _ = killed_semigroup(M1, INTERVAL, 1.0, t, [0.0], PathConfig(**base))
    bridged, se = killed_semigroup(M1, INTERVAL, 1.0, t, [0.0], PathConfig(bridge=True, **base))
    assert plain - ref > 5 * se  # discrete monitoring misses exits
    assert abs(bridged - ref) < 0.5 * (plain - ref)


def test_resolvent_matches_bvp_oracle():
    ref = resolvent_oracle(1.0)
    est = resolvent_mc(M1, INTERVAL, constant(1.0), 1.0, [0.0],
                       PathConfig(h=1e-3, paths=20000, seed=2, bridge=True, crn=False))
    assert est.tail_bound < 1e-5
    assert abs(est.estimate - ref) <= 3 * est.stderr + 2e-3


@given(st.floats(0.2, 5.0))
def test_resolvent_of_one_bounded(lam):
    est = resolvent_mc(M1, INTERVAL, 1.0, lam, [0.3], PathConfig(h=0.01, paths=200, seed=1))
    assert 0.0 <= est.estimate <= 1.0 / lam


def test_resolvent_whole_space_is_deterministic():
    lam = 1.0
    est = resolvent_mc(M1, WholeSpace(1), 1.0, lam, [0.0], PathConfig(h=0.01, paths=64, seed=0))
    T = est.horizon
    assert est.stderr == 0.0 and est.censored == 64
    assert est.estimate == pytest.approx(-np.expm1(-lam * T) / lam, rel=1e-4)
    assert est.tail_bound == pytest.approx(np.exp(-lam * T) / lam)


def test_killed_semigroup_mean_of_linear_field():
    est, se = killed_semigroup(M1, WholeSpace(1), linear([1.0]), 1.0, [2.0],
                               PathConfig(h=0.1, paths=20000, seed=4))
    assert abs(est - 2.0 * np.exp(-0.5)) <= 4 * se


def test_domain_monotonicity_under_crn():
    cfg = PathConfig(h=0.01, paths=2000, seed=9)
    small = simulate_exits(M2, Sphere([0.0], 0.5, 2), [0.1, 0.0], cfg, T=2.0, F=1.0, discount=1.0)
    large = simulate_exits(M2, Sphere([0.0], 1.0, 2), [0.1, 0.0], cfg, T=2.0, F=1.0, discount=1.0)
    assert np.all(small.tau <= large.tau)
    assert np.all(small.integral <= large.integral + 1e-15)


@pytest.mark.parametrize("crn", [True, False])
def test_deterministic_given_seed(crn):
    cfg = PathConfig(h=0.01, paths=3000, seed=21, block=1024, bridge=True, crn=crn)
    a = simulate_exits(M2, Sphere([0.0], 0.5, 2), [0.0, 0.0], cfg, T=1.0, F=1.0)
    b = simulate_exits(M2, Sphere([0.0], 0.5, 2), [0.0, 0.0], cfg, T=1.0, F=1.0)
    np.testing.assert_array_equal(a.tau, b.tau)
    np.testing.assert_array_equal(a.integral, b.integral)
    c = simulate_exits(M2, Sphere([0.0], 0.5, 2), [0.0, 0.0], PathConfig(**{**cfg.__dict__, "seed": 22}),
                       T=1.0, F=1.0)
    assert not np.array_equal(a.tau, c.tau)


def test_block_streams_are_independent():
    a = block_rng(0, 0).standard_normal(8)
    b = block_rng(0, 1).standard_normal(8)
    u = block_rng(0, 0, uniform=True).random(8)
    assert not np.array_equal(a, b)
    assert not np.allclose(norm.cdf(a), u)


def test_cylindrical_control_is_constant_in_n():
    m = make_measure([1.0 / (np.pi * k) ** 2 for k in range(1, 5)])
    cfg = PathConfig(h=0.01, paths=2000, seed=8, bridge=True)
    rows = cylindrical_convergence(m, lambda n: Slab([1.0], 0.2, n), 1.0, 1.0, [0.0], [1, 2, 4], cfg)
    vals = {r["estimate"] for r in rows}
    assert len(vals) == 1


def test_cylindrical_reports_outside_start():
    m = make_measure([1.0, 1.0])
    rows = cylindrical_convergence(m, lambda n: Sphere([0.0], 0.5, n), 1.0, 1.0, [0.0, 0.6], [1, 2],
                                   PathConfig(h=0.01, paths=100))
    assert "error" in rows[1] and "estimate" in rows[0]


def test_dump_round_trip(tmp_path):
    path = tmp_path / "paths.bin"
    cfg = PathConfig(h=0.01, paths=50, seed=1, dump=str(path))
    ens = simulate_exits(M1, INTERVAL, [0.0], cfg, T=1.0, F=1.0)
    rec = np.fromfile(path, dtype=[("index", "<u8"), ("tau", "<f8"), ("integral", "<f8")])
    np.testing.assert_array_equal(rec["tau"], ens.tau)
    np.testing.assert_array_equal(rec["index"], np.arange(50))


def test_path_config_validation():
    with pytest.raises(ValueError):
        PathConfig(h=0.0)
    with pytest.raises(ValueError):
        PathConfig(h=0.1, T_max=0.01)
