import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbkinetic.discretize import DiscreteModel, random_jpositive_instance
from fbkinetic.errors import EndpointOnSpectrum, NearZeroEigenvalue
from fbkinetic.krein import decompose, spectral_function_residuals, spectral_projection

SQRT3 = np.sqrt(3.0)


def test_identity_model():
    k = decompose(DiscreteModel.from_matrices(np.eye(2), np.array([1.0, -1.0])))
    np.testing.assert_allclose(k.eigenvalues, [-1.0, 1.0])
    np.testing.assert_allclose(k.Pplus, np.diag([1.0, 0.0]), atol=1e-15)
    assert k.gamma == pytest.approx(1.0) and k.beta_proj == pytest.approx(0.0, abs=1e-15)


def test_coupled_eigenpairs(coupled2_k):
    k = coupled2_k
    np.testing.assert_allclose(k.eigenvalues, [-SQRT3, SQRT3], atol=1e-12)
    vp = k.V_plus[:, 0]
    vm = k.V_minus[:, 0]
    assert vp[1] / vp[0] == pytest.approx(SQRT3 - 2, abs=1e-13)
    assert vm[1] / vm[0] == pytest.approx(-(2 + SQRT3), abs=1e-12)
    np.testing.assert_allclose(k.krein_gram(), np.diag([-1.0, 1.0]), atol=1e-13)
    assert k.beta_proj == pytest.approx(2 - SQRT3, abs=1e-10)


def test_hilbert_case():
    rng = np.random.default_rng(4)
    Q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    L = Q @ np.diag([1.0, 2, 3, 4, 5]) @ Q.T
    k = decompose(DiscreteModel.from_matrices(L, np.ones(5)))
    np.testing.assert_allclose(k.eigenvalues, [1, 2, 3, 4, 5], atol=1e-12)
    np.testing.assert_allclose(k.Pplus, np.eye(5), atol=1e-12)


def test_near_zero_eigenvalue():
    L = np.diag([1.0, 1e-15])
    with pytest.raises(NearZeroEigenvalue):
        decompose(DiscreteModel.from_matrices(L, np.array([1.0, -1.0])))


def test_projection_examples(coupled2_k):
    k = coupled2_k
    np.testing.assert_allclose(spectral_projection(k, (-np.inf, 0), (0, np.inf)), np.eye(2), atol=1e-13)
    np.testing.assert_allclose(spectral_projection(k), 0.0)
    E = spectral_projection(k, (0, np.inf))
    np.testing.assert_allclose(E, k.Pplus, atol=1e-14)
    assert np.linalg.matrix_rank(E) == 1
    with pytest.raises(EndpointOnSpectrum):
        spectral_projection(k, (0.0, SQRT3))


def test_uncoupled_constants(uncoupled):
    k = decompose(uncoupled)
    assert k.gamma == pytest.approx(1.0) and k.beta_proj == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 10_000))
def test_decomposition_invariants(n, seed):
    m = random_jpositive_instance(n, seed)
    k = decompose(m)
    assert k.eigen_residual() <= 1e-10
    np.testing.assert_array_equal(k.krein_signs, np.sign(k.eigenvalues))
    np.testing.assert_allclose(k.krein_gram(), np.diag(np.sign(k.eigenvalues)), atol=1e-10)
    np.testing.assert_allclose(k.Pplus + k.Pminus, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(k.Pplus @ k.Pplus, k.Pplus, atol=1e-10)
    B = m.B_mat
    assert np.max(np.abs(k.Pplus @ B - B @ k.Pplus)) <= 1e-10 * np.max(np.abs(B))
    assert 0 < k.gamma <= 1 + 1e-12 and 0 <= k.beta_proj < 1
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((100, n))
    assert np.all(m.krein(h @ B.T, h) > 0)


def test_degenerate_basis_independence():
    # repeated eigenvalues: re-randomising the eigenbasis leaves projections unchanged
    L = np.diag([1.0, 1.0, 2.0, 2.0])
    m = DiscreteModel.from_matrices(L, np.array([1.0, 1.0, -1.0, -1.0]))
    k = decompose(m)
    rng = np.random.default_rng(0)
    Q = np.linalg.qr(rng.standard_normal((2, 2)))[0]
    V = k.eigenvectors.copy()
    pos = np.flatnonzero(k.pos)
    V[:, pos] = V[:, pos] @ Q
    from fbkinetic.krein import from_cache
    k2 = from_cache(m, k.eigenvalues, V)
    np.testing.assert_allclose(k2.Pplus, k.Pplus, atol=1e-14)


def test_spectral_function_properties():
    k = decompose(random_jpositive_instance(20, 5))
    lam = np.sort(k.eigenvalues)
    mid = 0.5 * (lam[-1] + lam[-2])
    res = spectral_function_residuals(k, (0.0, mid), (lam[-2] * 0.5, np.inf))
    for key in ("idempotent", "multiplicative", "whole_line", "selfadjoint", "commutes"):
        assert res[key] <= 1e-10, key
    assert res["definiteness"] > 0
