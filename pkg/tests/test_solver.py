import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad, solve_bvp
from scipy.stats import norm

from oulab.errors import (
    BoundaryOutsideGrid,
    DimensionTooLarge,
    EmptyDomain,
    NonPositiveLambda,
    UnboundedDomain,
    UnsupportedSource,
)
from oulab.geometry import (
    Ellipsoid,
    Graph,
    HalfSpace,
    QuadraticField,
    SamplerConfig,
    Slab,
    Sphere,
    WholeSpace,
    constants_ABC,
)
from oulab.solver import (
    apply_ou_operator,
    boundary_identity_residual,
    check_apriori,
    check_energy_identity,
    check_w22_bound,
    discretize,
    grid_norms,
    solve_dirichlet,
    sobolev_norms,
    trace_inequality_check,
    w22_constant,
)
from oulab.solver.export import export_solution, load_solution, mask_from_rle, mask_rle
from oulab.sources import bump, constant, random_trig
from oulab.spectral import inverse_pi_sq, make_measure

M1 = make_measure([1.0])
M2 = make_measure([1.0, 1.0])
INTERVAL = Sphere([0.0], 1.0, 1)
DISC = Sphere([0.0], 1.0, 2)
FAST = SamplerConfig(n_starts=128, ascent_iters=10, ascent_starts=8)


def bvp_interval(lam, f=1.0, eig=1.0):
    """``lam u - (eig/2) u'' + (x/2) u' = f`` on (-1, 1), zero ends, via collocation."""
    def rhs(x, y):
        return np.vstack([y[1], (lam * y[0] + 0.5 * x * y[1] - f) * 2.0 / eig])

    x = np.linspace(-1, 1, 201)
    sol = solve_bvp(rhs, lambda a, b: np.array([a[0], b[0]]), x, np.zeros((2, x.size)), tol=1e-10,
                    max_nodes=100000)
    assert sol.success
    return sol.sol


# -- discretisation -------------------------------------------------------------

def test_interval_mask_is_sign_check():
    grid = discretize(M1, INTERVAL, resolution=100, clip=False)
    c = grid.axes()[0]
    np.testing.assert_array_equal(grid.mask, np.abs(c) < 1.0)
    assert grid.lo[0] == -6.0 and grid.hi[0] == 6.0


def test_disc_area_ratio():
    grid = discretize(M2, DISC, resolution=128)
    box = np.prod(grid.hi - grid.lo)
    assert grid.n_interior / grid.mask.size == pytest.approx(np.pi / box, rel=0.02)


def test_half_space_rows_identical():
    grid = discretize(M2, HalfSpace([1.0, 0.0], 0.0, 2), resolution=48)
    assert np.all(grid.mask == grid.mask[:, :1])


def test_cut_fractions_and_containment():
    grid = discretize(M2, DISC, resolution=64)
    pts = grid.interior_points()
    assert np.all(DISC.value(pts) < 0)
    for cut in grid.cuts:
        assert np.all((cut.theta > 0) & (cut.theta <= 1))
        inner = cut.theta < 0.5
        np.testing.assert_allclose(DISC.value(cut.points[inner]), 0.0, atol=1e-12)


def test_discretize_errors():
    with pytest.raises(DimensionTooLarge):
        discretize(make_measure([1.0] * 4), Sphere([0.0], 1.0, 4))
    with pytest.raises(EmptyDomain):
        discretize(M1, Sphere([20.0], 0.1, 1), resolution=32, clip=False)


# -- solves ---------------------------------------------------------------------

def test_zero_source_zero_solution():
    sol = solve_dirichlet(M2, discretize(M2, DISC), 0.0, 1.0)
    assert not np.any(sol.u)
    assert check_energy_identity(M2, sol) == 0.0
    assert check_apriori(M2, sol) == (0.0, 0.0)


def test_whole_space_hermite_solution():
    # L x = -x/2, so (lam - L) x = (lam + 1/2) x
    grid = discretize(M1, WholeSpace(1), resolution=512)
    sol = solve_dirichlet(M1, grid, lambda x: x[:, 0], 1.0)
    x = grid.interior_points()[:, 0]
    inner = np.abs(x) < 3.0
    assert np.max(np.abs(sol.u[inner] - 2.0 * x[inner] / 3.0)) < 2e-3


def test_interval_matches_collocation_oracle():
    u = bvp_interval(1.0)
    grid = discretize(M1, INTERVAL, resolution=512)
    sol = solve_dirichlet(M1, grid, 1.0, 1.0)
    x = grid.interior_points()[:, 0]
    assert np.max(np.abs(sol.u - u(x)[0])) < 2e-5


def test_interval_l2_bound_example():
    sol = solve_dirichlet(M1, discretize(M1, INTERVAL), 1.0, 2.0)
    assert sol.f_norm_sq() <= 1.0
    assert sol.l2_sq() <= 0.25


def test_nonpositive_lambda():
    with pytest.raises(NonPositiveLambda):
        solve_dirichlet(M1, discretize(M1, INTERVAL), 1.0, 0.0)


def test_solver_residual_tolerance():
    sol = solve_dirichlet(M2, discretize(M2, DISC), random_trig(1, 2), 1.0)
    assert sol.residual <= 1e-9


@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_operator_is_symmetric(seed, n):
    m = M1 if n == 1 else M2
    grid = discretize(m, Sphere([0.0], 1.0, n), resolution=64 if n == 1 else 24)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, grid.n_interior))
    sol = solve_dirichlet(m, grid, 1.0, 1.0)
    w = sol.weights
    Lu = apply_ou_operator(m, grid, u, sol.assembly)
    Lv = apply_ou_operator(m, grid, v, sol.assembly)
    lhs, rhs = w @ (Lu * v), w @ (u * Lv)
    assert abs(lhs - rhs) <= 1e-12 * (abs(lhs) + abs(rhs) + 1e-300)


@given(st.integers(0, 10_000), st.floats(0.1, 5.0))
def test_maximum_principle(seed, lam):
    grid = discretize(M2, DISC, resolution=32)
    rng = np.random.default_rng(seed)
    f = rng.uniform(0.0, 1.0, grid.n_interior)
    assert np.all(solve_dirichlet(M2, grid, f, lam).u >= -1e-12)


def test_hermite_eigenrelation_second_order():
    errs = []
    for res in (128, 256):
        grid = discretize(M1, WholeSpace(1), resolution=res)
        x = grid.interior_points()[:, 0]
        Lx = apply_ou_operator(M1, grid, x)
        inner = np.abs(x) < 4.0
        errs.append(np.max(np.abs(Lx[inner] + 0.5 * x[inner])))
    assert errs[1] < 5e-3
    assert errs[0] / errs[1] > 3.0


@given(st.integers(0, 10_000), st.floats(0.1, 4.0))
def test_resolvent_contraction(seed, lam):
    grid = discretize(M2, DISC, resolution=32)
    f = random_trig(seed, 2)
    a = solve_dirichlet(M2, grid, f, lam).l2_sq()
    b = solve_dirichlet(M2, grid, f, 2.0 * lam).l2_sq()
    assert b <= a * (1 + 1e-10)


# -- norms and checks -----------------------------------------------------------

def test_zero_solution_norms():
    grid = discretize(M1, WholeSpace(1), resolution=256)
    z = sobolev_norms(M1, solve_dirichlet(M1, grid, 0.0, 1.0))
    assert z.l2_sq == z.grad_sq == z.hess_sq == 0.0


def test_norms_of_vanishing_quadratic():
    # u = 1 - x^2 vanishes on the interval ends; oracle: scipy quadrature
    grid = discretize(M1, INTERVAL, resolution=4096)
    z = grid_norms(M1, grid, lambda x: 1.0 - x[:, 0] ** 2)
    l2 = quad(lambda x: (1 - x * x) ** 2 * norm.pdf(x), -1, 1)[0]
    grad = quad(lambda x: 4 * x * x * norm.pdf(x), -1, 1)[0]
    assert z.l2_sq == pytest.approx(l2, rel=1e-3)
    assert z.grad_sq == pytest.approx(grad, rel=1e-3)
    # second differences of a quadratic are exact away from the wall
    assert z.hess_sq + 4.0 * z.omitted_mass == pytest.approx(4.0 * (2 * norm.cdf(1) - 1), rel=1e-3)


def test_energy_identity_interval_constant_source():
    sol = solve_dirichlet(M1, discretize(M1, INTERVAL), 1.0, 1.0)
    assert check_energy_identity(M1, sol) < 1e-6


@pytest.mark.parametrize("m, dom", [(M1, INTERVAL), (M2, DISC)])
def test_energy_and_apriori_random_sources(m, dom):
    grid = discretize(m, dom)
    for seed in range(20):
        for lam in (0.5, 1.0, 2.0):
            sol = solve_dirichlet(m, grid, random_trig(seed, dom.dim), lam)
            fn = sol.f_norm_sq()
            assert check_energy_identity(m, sol) < 1e-6
            s1, s2 = check_apriori(m, sol)
            assert s1 >= -1e-6 * fn and s2 >= -1e-6 * fn


def test_apriori_example_lambda_two():
    grid = discretize(M1, INTERVAL)
    f = constant(1.0)
    sol = solve_dirichlet(M1, grid, f, 2.0)
    scale = 1.0 / np.sqrt(sol.f_norm_sq())
    sol = solve_dirichlet(M1, grid, lambda x: scale * f(x), 2.0)
    assert sol.f_norm_sq() == pytest.approx(1.0)
    assert sol.l2_sq() <= 0.25 and sol.grad_sq() <= 1.0


def test_w22_constant_values():
    assert w22_constant(1.0, 5.0, 5.0, -0.5) == 8.0
    assert w22_constant(1.0, 1.0, 1.0, 0.0) == 8.0
    assert w22_constant(1.0, 1.0, 1.0, 1.0) == pytest.approx(8 + 4 * (2 + 2 * np.sqrt(2) + 1 + 1))
    assert w22_constant(1.0, 1.0, 1.0, 1.0) == pytest.approx(35.3137, abs=1e-4)


def test_w22_bound_small_ball():
    m = inverse_pi_sq(2)
    dom = Sphere([0.0], 0.1, 2)
    rep = constants_ABC(m, dom, FAST)
    assert rep.C <= 0
    sol = solve_dirichlet(m, discretize(m, dom, resolution=128), 1.0, 1.0)
    ratio, K2, M = check_w22_bound(m, sol, rep)
    assert M == 8.0 and K2 == pytest.approx(11.0)
    assert ratio <= K2


def test_boundary_identity_zero_source():
    sol = solve_dirichlet(M1, discretize(M1, INTERVAL), 0.0, 1.0)
    assert boundary_identity_residual(M1, sol, INTERVAL) == 0.0


def test_boundary_identity_rejects_sources_at_boundary():
    sol = solve_dirichlet(M1, discretize(M1, INTERVAL), 1.0, 1.0)
    with pytest.raises(UnsupportedSource):
        boundary_identity_residual(M1, sol, INTERVAL)


def test_boundary_identity_converges_on_interval():
    f = bump([0.0], 0.5)
    res = [boundary_identity_residual(M1, solve_dirichlet(M1, discretize(M1, INTERVAL, resolution=r), f, 1.0),
                                      INTERVAL) for r in (128, 256, 512)]
    assert res[0] > res[1] > res[2]


def test_boundary_identity_converges_on_disc():
    f = bump([0.0, 0.0], 0.5)
    res = []
    for r in (64, 128):
        sol = solve_dirichlet(M2, discretize(M2, DISC, resolution=r), f, 1.0)
        res.append(boundary_identity_residual(M2, sol, DISC))
    assert res[0] / res[1] >= 1.3


def test_boundary_outside_grid_box_is_rejected():
    # 6 standard deviations of lambda_2 = 1/(4 pi^2) do not reach the unit circle
    m = inverse_pi_sq(2)
    f = bump([0.0, 0.0], 0.5)
    sol = solve_dirichlet(m, discretize(m, DISC, resolution=64), f, 1.0)
    with pytest.raises(BoundaryOutsideGrid):
        boundary_identity_residual(m, sol, DISC)
    with pytest.raises(BoundaryOutsideGrid):
        trace_inequality_check(m, sol, DISC, constants_ABC(m, DISC, FAST))
    wide = []
    for r in (64, 128):
        sol = solve_dirichlet(m, discretize(m, DISC, resolution=r, box_halfwidth=12.0), f, 1.0)
        wide.append(boundary_identity_residual(m, sol, DISC))
    assert wide[1] < wide[0]


class _PinchedDisc:
    """Unit disc whose gradient is zeroed at the ray point (1, 0)."""

    def __init__(self):
        self._d = DISC

    def __getattr__(self, name):
        return getattr(self._d, name)

    def gradient(self, x):
        out = self._d.gradient(x)
        out[np.atleast_2d(x)[:, 0] > 1 - 1e-9] = 0.0
        return out


def test_degenerate_boundary_points_are_skipped():
    dom = _PinchedDisc()
    f = bump([0.0, 0.0], 0.5)
    sol = solve_dirichlet(M2, discretize(M2, DISC, resolution=64), f, 1.0)
    with pytest.warns(RuntimeWarning, match="skipped 1 boundary points"):
        res = boundary_identity_residual(M2, sol, dom)
    assert np.isfinite(res)
    with pytest.warns(RuntimeWarning):
        tr = trace_inequality_check(M2, sol, dom, constants_ABC(M2, DISC, FAST))
    assert tr["skipped"] == 1 and np.isfinite(tr["lhs"])


def test_trace_zero_solution():
    rep = constants_ABC(M1, INTERVAL, FAST)
    sol = solve_dirichlet(M1, discretize(M1, INTERVAL), 0.0, 1.0)
    assert trace_inequality_check(M1, sol, INTERVAL, rep) == {"lhs": 0.0, "rhs": 0.0, "slack": 0.0, "skipped": 0}


def test_trace_interval_is_two_point_sum():
    # g = x^2 - 1: the boundary term is lam^2 u'(x)^2 |g'(x)| N(x) summed over x = +-1
    u = bvp_interval(1.0)
    ref = sum(u(x)[1] ** 2 * 2.0 * norm.pdf(x) for x in (-1.0, 1.0))
    rep = constants_ABC(M1, INTERVAL, FAST)
    sol = solve_dirichlet(M1, discretize(M1, INTERVAL, resolution=512), 1.0, 1.0)
    tr = trace_inequality_check(M1, sol, INTERVAL, rep)
    assert tr["lhs"] == pytest.approx(ref, rel=1e-2)
    assert tr["slack"] > 0


def test_trace_disc_random_sources():
    rep = constants_ABC(M2, DISC, FAST)
    grid = discretize(M2, DISC)
    for seed in range(20):
        sol = solve_dirichlet(M2, grid, random_trig(seed, 2), 1.0)
        assert trace_inequality_check(M2, sol, DISC, rep)["slack"] >= -1e-4 * sol.f_norm_sq()


def test_trace_needs_bounded_domain():
    m = M2
    dom = HalfSpace([1.0, 0.0], 0.5, 2)
    sol = solve_dirichlet(m, discretize(m, dom, resolution=32), 1.0, 1.0)
    with pytest.raises(UnboundedDomain):
        trace_inequality_check(m, sol, dom, constants_ABC(m, dom, FAST))


def _gallery_cases():
    m = inverse_pi_sq(2)
    for n in (1, 2):
        sub = m.truncate(n) if n < 2 else m
        yield sub, Sphere([0.0], 0.1, n)
        yield sub, Ellipsoid([1.0, 2.0], [0.02, 0.0], 0.15, n)
        yield sub, HalfSpace([1.0, 0.5], 0.1, n)
        yield sub, Slab([1.0], 0.2, n)
        if n == 2:
            yield sub, Graph(QuadraticField(0.1, [0.3], [[1.0]]), 1, 2)


@pytest.mark.parametrize("case", list(range(9)))
def test_all_checks_pass_on_gallery(case):
    m, dom = list(_gallery_cases())[case]
    rep = constants_ABC(m, dom, FAST)
    grid = discretize(m, dom)
    for seed in range(3):
        sol = solve_dirichlet(m, grid, random_trig(seed, dom.dim), 1.0)
        fn = sol.f_norm_sq()
        assert check_energy_identity(m, sol) < 1e-6
        assert min(check_apriori(m, sol)) >= -1e-6 * fn
        ratio, K2, _ = check_w22_bound(m, sol, rep)
        assert ratio <= K2
        if dom.bounds is not None:
            assert trace_inequality_check(m, sol, dom, rep)["slack"] >= -1e-4 * fn


# -- export ---------------------------------------------------------------------

def test_mask_rle_round_trip(rng):
    mask = rng.uniform(size=(7, 9)) < 0.4
    assert np.array_equal(mask_from_rle(mask_rle(mask), mask.shape), mask)


def test_export_round_trip(tmp_path):
    sol = solve_dirichlet(M2, discretize(M2, DISC, resolution=24), 1.0, 1.0)
    export_solution(sol, tmp_path / "u")
    values, mask, meta = load_solution(tmp_path / "u")
    np.testing.assert_array_equal(values, sol.values)
    np.testing.assert_array_equal(mask, sol.grid.mask)
    assert meta["shape"] == [24, 24] and meta["dtype"] == "<f8"
