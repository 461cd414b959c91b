import numpy as np
import pytest

from fbkinetic import halfrange as hr
from fbkinetic.discretize import DiscreteModel, random_jpositive_instance
from fbkinetic.duhamel import (ForcingFunction, equation_residual, particular_solutions, solve_nonhomogeneous,
                               solve_nonhomogeneous_halfspace)
from fbkinetic.errors import TailNotIntegrable
from fbkinetic.krein import decompose


@pytest.fixture(scope="module")
def model():
    return random_jpositive_instance(10, 11)


@pytest.fixture(scope="module")
def k(model):
    return decompose(model)


def _bd(m, rng, tau):
    return hr.BoundaryData(np.where(m.plus_mask, rng.standard_normal(m.n), 0.0),
                           np.where(m.minus_mask, rng.standard_normal(m.n), 0.0), tau)


def test_zero_forcing_matches_homogeneous(model, k):
    bd = _bd(model, np.random.default_rng(0), 1.0)
    s = solve_nonhomogeneous(k, bd, ForcingFunction.zero(model.n))
    xs = np.linspace(0, 1, 9)
    np.testing.assert_array_equal(s(xs), hr.solve(k, bd)(xs))
    ps = particular_solutions(k, ForcingFunction.zero(model.n), 1.0)
    assert not np.any(ps.plus(xs)) and not np.any(ps.minus(xs))


def test_constant_forcing_single_mode():
    m = DiscreteModel.from_matrices(np.array([[2.5]]), np.array([1.0]))
    k = decompose(m)
    ps = particular_solutions(k, ForcingFunction.constant([1.0], 3.0), 3.0)
    x = np.linspace(0, 3, 13)
    np.testing.assert_allclose(ps.plus(x)[:, 0], (1 - np.exp(-2.5 * x)) / 2.5, rtol=1e-15, atol=1e-16)


def test_against_refined_trapezoid(model, k):
    rng = np.random.default_rng(2)
    xs = np.sort(np.r_[0.0, rng.uniform(0, 1, 6), 1.0])
    f = ForcingFunction(xs, rng.standard_normal((xs.size, model.n)))
    ps = particular_solutions(k, f, 1.0)
    # trapezoid on a grid 10x finer than needed for 1e-8 at the largest rate
    x = 0.6
    y = np.unique(np.r_[np.linspace(0, 1, 200001), xs, x])
    fp, fm = k.coefficients(f(y))
    wp = np.exp(-np.outer(x - y[y <= x], k.lam_plus)) * fp[y <= x]
    ref_p = np.trapezoid(wp, y[y <= x], axis=0)
    wm = np.exp(np.outer(y[y >= x] - x, k.lam_minus)) * fm[y >= x]
    ref_m = -np.trapezoid(wm, y[y >= x], axis=0)
    np.testing.assert_allclose(ps.plus_coords(x)[0], ref_p, atol=1e-8)
    np.testing.assert_allclose(ps.minus_coords(x)[0], ref_m, atol=1e-8)


def test_manufactured_solution(model, k):
    rng = np.random.default_rng(3)
    B = model.B_mat
    for _ in range(5):
        u = rng.standard_normal(model.n)
        xs = np.linspace(0, 1, 4001)
        f = ForcingFunction.sampled(lambda x: np.exp(-x) * (B @ u - u), xs)
        bd = hr.BoundaryData.from_full(model, u, 1.0, np.exp(-1.0) * u)
        s = solve_nonhomogeneous(k, bd, f)
        xi = np.linspace(0.05, 0.95, 10)
        exact = np.exp(-xi)[:, None] * u
        err = np.linalg.norm(s(xi) - exact, axis=1) / np.linalg.norm(exact, axis=1)
        assert err.max() <= 1e-6
        assert equation_residual(s, f, xi).max() <= 1e-6
        assert max(s.diagnostics["bc_residual"].values()) <= 1e-10


def test_superposition(model, k):
    rng = np.random.default_rng(4)
    xs = np.linspace(0, 1, 11)
    f1 = ForcingFunction(xs, rng.standard_normal((11, model.n)))
    f2 = ForcingFunction(xs, rng.standard_normal((11, model.n)))
    bd = _bd(model, rng, 1.0)
    s1, s2 = solve_nonhomogeneous(k, bd, f1), solve_nonhomogeneous(k, bd, f2)
    s12 = solve_nonhomogeneous(k, bd, ForcingFunction(xs, f1.values + f2.values))
    h = hr.solve(k, bd)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(s12(x), s1(x) + s2(x) - h(x), atol=1e-9)


def test_derivative_matches_finite_difference(model, k):
    rng = np.random.default_rng(5)
    xs = np.linspace(0, 1, 21)
    f = ForcingFunction(xs, rng.standard_normal((21, model.n)))
    s = solve_nonhomogeneous(k, _bd(model, rng, 1.0), f)
    x, h = 0.437, 1e-6
    fd = (s(x + h) - s(x - h)) / (2 * h)
    np.testing.assert_allclose(s.derivative(x), fd, rtol=1e-5, atol=1e-6)


def test_halfspace_compact_support(model, k):
    rng = np.random.default_rng(6)
    xs = np.linspace(0, 1, 11)
    vals = rng.standard_normal((11, model.n))
    vals[-1] = 0.0
    f = ForcingFunction(xs, vals, tail="zero")
    phi = np.where(model.plus_mask, rng.standard_normal(model.n), 0.0)
    s = solve_nonhomogeneous_halfspace(k, phi, f)
    ps = s.particular
    assert not np.any(ps.minus(np.array([1.0, 2.0, 7.0])))
    x = np.geomspace(1e-3, 10 / k.min_abs_eigenvalue, 25)
    norms = np.sqrt(np.array([model.norm(v) for v in s(x)]) ** 2)
    assert np.all(np.isfinite(norms)) and norms[-1] < norms.max()
    assert s.diagnostics["bc_residual"]["plus"] <= 1e-10


def test_halfspace_exponential_tail(model, k):
    rng = np.random.default_rng(7)
    a = rng.standard_normal(model.n)
    xs = np.linspace(0, 2, 401)
    f = ForcingFunction(xs, np.exp(-xs)[:, None] * a, tail="exponential", rate=1.0)
    s = solve_nonhomogeneous_halfspace(k, np.zeros(model.n), f)
    xi = np.array([0.5, 1.9, 2.5, 6.0])
    assert equation_residual(s, f, xi).max() <= 1e-6
    # continuity across the last sample
    np.testing.assert_allclose(s(2.0 - 1e-9), s(2.0 + 1e-9), atol=1e-7)


def test_halfspace_zero_forcing_exact(model, k):
    phi = np.where(model.plus_mask, 1.0, 0.0)
    s = solve_nonhomogeneous_halfspace(k, phi, ForcingFunction.zero(model.n))
    x = np.array([0.0, 0.5, 3.0])
    np.testing.assert_array_equal(s(x), hr.solve_halfspace(k, phi)(x))


def test_constant_tail_rejected(model, k):
    f = ForcingFunction.constant(np.ones(model.n), 1.0)
    with pytest.raises(TailNotIntegrable):
        solve_nonhomogeneous_halfspace(k, np.zeros(model.n), f)


def test_forcing_validation():
    with pytest.raises(ValueError):
        ForcingFunction(np.array([0.1, 1.0]), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        ForcingFunction(np.array([0.0, 1.0]), np.zeros((2, 1)), tail="exponential")
