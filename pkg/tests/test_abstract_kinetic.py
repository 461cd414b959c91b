import json

import numpy as np
import pytest

from fbkinetic import abstract_kinetic as ak
from fbkinetic import halfrange as hr
from fbkinetic.discretize import DiscreteModel
from fbkinetic.duhamel import ForcingFunction
from fbkinetic.errors import NotPositive, NotSymmetric, ZeroTEntry
from fbkinetic.krein import decompose
from fbkinetic.oracle import brute_force_bvp

T2 = np.array([2.0, -3.0])
A2 = np.array([[4.0, 1.0], [1.0, 4.0]])


def test_spaces_example():
    t = ak.TModel(T2, A2)
    sp = ak.build_spaces(t)
    assert sp.norm(np.array([1.0, 1.0])) == pytest.approx(np.sqrt(5.0), abs=1e-15)
    np.testing.assert_array_equal(sp.Q_plus, np.diag([1.0, 0.0]))
    assert sp.duality_defect <= 1e-12
    assert abs(sp.duality_defect) <= 1e-12  # equality case g = |T| h is included


def test_signs_only_spaces_coincide():
    t = ak.TModel(np.array([1.0, -1.0, 1.0]), np.eye(3))
    h = np.array([0.3, -2.0, 1.1])
    assert t.norm_T(h) == pytest.approx(np.linalg.norm(h)) == pytest.approx(t.norm_T_dual(h))


def test_q_commutes_with_abs_t():
    t = ak.TModel(np.array([2.0, -0.5, 3.0, -4.0]), np.eye(4))
    D = np.diag(t.abs_T)
    for Q in (t.Q_plus, t.Q_minus):
        np.testing.assert_array_equal(Q @ D, D @ Q)
        np.testing.assert_array_equal(Q @ np.linalg.inv(D), np.linalg.inv(D) @ Q)


def test_zero_t_entry():
    with pytest.raises(ZeroTEntry):
        ak.TModel(np.array([1.0, 0.0]), np.eye(2))


def test_reduce_example():
    red = ak.reduce(ak.TModel(T2, A2))
    m = red.model
    np.testing.assert_allclose(m.L_mat, [[2.0, 0.5], [1 / 3, 4 / 3]], rtol=1e-15)
    np.testing.assert_array_equal(m.J_diag, [1.0, -1.0])
    assert m.symmetry_defect() < 1e-15 and np.all(m.w_eigenvalues > 0)
    assert red.pairing_defect <= 1e-12
    # mpmath: eigenvalues of T^{-1} A are 1/3 -+ sqrt(47/18)
    np.testing.assert_allclose(decompose(m).eigenvalues, [-1.28255995247210967, 1.94922661913877634], rtol=1e-14)


def test_reduce_rejects():
    with pytest.raises(NotSymmetric):
        ak.reduce(ak.TModel(np.array([1.0, -1.0]), np.array([[1.0, 2.0], [0.0, 1.0]])))
    with pytest.raises(NotPositive):
        ak.reduce(ak.TModel(np.array([1.0, -1.0]), np.array([[1.0, 2.0], [2.0, 1.0]])))


def test_signature_t_is_verbatim():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 6))
    A = X @ X.T + np.eye(6)
    J = np.array([1.0, -1, 1, -1, 1, 1])
    red = ak.reduce(ak.TModel(J, A))
    ref = DiscreteModel.from_matrices(A, J)
    np.testing.assert_array_equal(red.model.L_mat, ref.L_mat)
    np.testing.assert_array_equal(red.model.weight_masses, ref.weight_masses)
    bd = hr.BoundaryData.from_full(ref, rng.standard_normal(6), 1.0)
    x = np.linspace(0, 1, 9)
    np.testing.assert_array_equal(ak.solve_kinetic(ak.TModel(J, A), bd)(x), hr.solve(decompose(ref), bd)(x))


def test_end_to_end_with_oracle():
    t = ak.TModel(T2, A2)
    bd = ak.boundary_from_kinetic(t, np.array([1.0, 0.0]), 1.0, np.array([0.0, 0.7]))
    s = ak.solve_kinetic(t, bd)
    m = ak.reduce(t).model
    r0 = s(0.0) - bd.phi_plus
    r1 = s(1.0) - bd.phi_minus
    assert t.norm_T(np.where(m.plus_mask, r0, 0.0)) <= 1e-8
    assert t.norm_T(np.where(m.minus_mask, r1, 0.0)) <= 1e-8
    o = brute_force_bvp(m, bd, None, 801)
    rel = np.linalg.norm(s(o.x) - o.values) / np.linalg.norm(o.values)
    assert rel < 1e-4


def test_scaling_invariance():
    rng = np.random.default_rng(1)
    T = np.array([2.0, -1.5, 0.7, -3.0])
    X = rng.standard_normal((4, 4))
    A = X @ X.T + np.eye(4)
    bd = ak.boundary_from_kinetic(ak.TModel(T, A), rng.standard_normal(4), 1.0)
    x = np.linspace(0, 1, 11)
    a = ak.solve_kinetic(ak.TModel(T, A), bd)(x)
    b = ak.solve_kinetic(ak.TModel(2 * T, 2 * A), bd)(x)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_forcing_is_divided_by_t():
    t = ak.TModel(T2, A2)
    f = ForcingFunction.constant([2.0, 3.0], 1.0)
    g = ak.forcing_to_reduced(t, f)
    np.testing.assert_allclose(g.values, [[1.0, -1.0], [1.0, -1.0]])


def test_json_and_csv_round_trip(tmp_path):
    t = ak.TModel(T2, A2, label="ex")
    t.to_json(tmp_path / "t.json")
    u = ak.TModel.from_json(tmp_path / "t.json")
    np.testing.assert_array_equal(u.A_mat, A2)
    np.savetxt(tmp_path / "t.csv", np.column_stack([T2, A2]), delimiter=",")
    v = ak.TModel.from_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(v.T_diag, T2)
    assert json.loads((tmp_path / "t.json").read_text())["label"] == "ex"
