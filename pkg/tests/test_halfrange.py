import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbkinetic import halfrange as hr
from fbkinetic.discretize import DiscreteModel, random_jpositive_instance
from fbkinetic.errors import BoundaryDataError, OutOfSlab
from fbkinetic.krein import decompose

SQRT3 = np.sqrt(3.0)


def _random_bd(m, rng, tau):
    return hr.BoundaryData(np.where(m.plus_mask, rng.standard_normal(m.n), 0.0),
                           np.where(m.minus_mask, rng.standard_normal(m.n), 0.0), tau)


def test_R_coupled(coupled2_k):
    R = hr.build_R(coupled2_k)
    np.testing.assert_allclose(R.apply_plus(np.array([1.0, 0.0])), [1.0, SQRT3 - 2], atol=1e-14)


def test_R_uncoupled_is_identity(uncoupled):
    k = decompose(uncoupled)
    R = hr.build_R(k)
    phi = np.array([0.3, -1.2, 0.0, 0.0])
    np.testing.assert_allclose(R.apply_plus(phi), phi, atol=1e-14)
    G = hr.build_G(k, 1.0, R)
    assert G.norm_plus < 1e-15 and G.norm_minus < 1e-15


@pytest.mark.parametrize("tau,expected", [(0.5, 0.1127047963015579), (1.0, 0.04740589435678499),
                                          (2.0, 0.00838710801617489)])
def test_G_coupled(coupled2_k, tau, expected):
    G = hr.build_G(coupled2_k, tau)
    assert G.norm_plus == pytest.approx(expected, abs=1e-10)
    assert G.norm_plus == pytest.approx((2 - SQRT3) * np.exp(-SQRT3 * tau), abs=1e-14)


def test_G_large_tau():
    k = decompose(random_jpositive_instance(6, 2, gap=1.0))
    G = hr.build_G(k, 50.0)
    assert max(G.norm_plus, G.norm_minus) < 1e-20


def test_coupled_solution(coupled2_k):
    bd = hr.BoundaryData(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.0)
    s = hr.solve(coupled2_k, bd, neumann=True)
    # mpmath solve of the 2x2 boundary system
    assert abs(s.coeff_plus[0]) == pytest.approx(1.0113783386805143, abs=1e-12)
    assert abs(s.coeff_minus[0]) == pytest.approx(1.0113783386805143, abs=1e-12)
    np.testing.assert_allclose(s(0.5), [0.32323864689950499] * 2, atol=1e-12)
    assert s.diagnostics["neumann_disagreement"] <= 1e-12


def test_decoupled_system(uncoupled):
    k = decompose(uncoupled)
    rng = np.random.default_rng(1)
    bd = _random_bd(uncoupled, rng, 0.7)
    s = hr.solve(k, bd)
    R = hr.build_R(k)
    np.testing.assert_allclose(s.coeff_plus, R.plus_coords(bd.phi_plus), atol=1e-14)


def test_heat_eigenmode():
    rng = np.random.default_rng(9)
    Q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    L = Q @ np.diag([0.5, 1.0, 2.0, 3.0]) @ Q.T
    k = decompose(DiscreteModel.from_matrices(L, np.ones(4)))
    v = Q[:, 2]
    s = hr.solve(k, hr.BoundaryData(v, None, 2.0))
    for x in (0.0, 0.4, 2.0):
        np.testing.assert_allclose(s(x), np.exp(-2.0 * x) * v, atol=1e-13)


def test_halfspace_coupled(coupled2_k):
    s = hr.solve_halfspace(coupled2_k, np.array([1.0, 0.0]))
    for x in (0.0, 0.3, 2.0):
        np.testing.assert_allclose(s(x), np.exp(-SQRT3 * x) * np.array([1.0, SQRT3 - 2]), atol=1e-14)
    plus, minus = s.mode_coordinates(np.array([0.0, 5.0]))
    assert np.all(minus == 0)


def test_out_of_slab_and_bad_data(coupled2_k):
    s = hr.solve(coupled2_k, hr.BoundaryData(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.0))
    with pytest.raises(OutOfSlab):
        s(1.5)
    with pytest.raises(BoundaryDataError):
        hr.solve(coupled2_k, hr.BoundaryData(np.array([1.0, 1.0]), np.array([0.0, 1.0]), 1.0))
    with pytest.raises(BoundaryDataError):
        hr.BoundaryData(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.inf)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 30), seed=st.integers(0, 10_000), tau=st.sampled_from([0.1, 1.0, 10.0]))
def test_random_solves(n, seed, tau):
    m = random_jpositive_instance(n, seed)
    k = decompose(m)
    rng = np.random.default_rng(seed)
    bd = _random_bd(m, rng, tau)
    s = hr.solve(k, bd, neumann=True)
    assert max(s.diagnostics["bc_residual"].values()) <= 1e-10
    # original (un-factored) system
    psi0, psit = s(0.0), s(tau)
    assert np.linalg.norm((psi0 - bd.phi_plus)[m.plus_mask]) <= 1e-10 * np.linalg.norm(bd.phi_plus)
    assert np.linalg.norm((psit - bd.phi_minus)[m.minus_mask]) <= 1e-10 * np.linalg.norm(bd.phi_minus)
    # linearity
    bd2 = _random_bd(m, rng, tau)
    s2 = hr.solve(k, bd2)
    s12 = hr.solve(k, hr.BoundaryData(bd.phi_plus + bd2.phi_plus, bd.phi_minus + bd2.phi_minus, tau))
    xs = np.linspace(0, tau, 7)
    np.testing.assert_allclose(s12(xs), s(xs) + s2(xs), atol=1e-10 * np.max(np.abs(s12(xs))))


def test_semigroup_monotone():
    m = random_jpositive_instance(15, 3)
    k = decompose(m)
    rng = np.random.default_rng(3)
    s = hr.solve_halfspace(k, np.where(m.plus_mask, rng.standard_normal(15), 0.0))
    norms = s.intrinsic_norms(np.array([0.0, 0.5, 1.0, 2.0]))[0]
    assert np.all(np.diff(norms) <= 1e-14)


def test_shuffled_eigen_order_same_solution():
    from fbkinetic.krein import from_cache
    m = random_jpositive_instance(12, 8)
    k = decompose(m)
    perm = np.random.default_rng(0).permutation(12)
    k2 = from_cache(m, k.eigenvalues[perm], k.eigenvectors[:, perm])
    bd = _random_bd(m, np.random.default_rng(1), 1.0)
    xs = np.linspace(0, 1, 20)
    np.testing.assert_allclose(hr.solve(k2, bd)(xs), hr.solve(k, bd, neumann=True)(xs), atol=1e-8)
