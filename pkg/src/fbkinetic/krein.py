"""Spectral decomposition of ``B = J L`` in the Krein space ``(H, [., .])``.

``L`` is W-self-adjoint and positive, so with ``Lh = W^{1/2} L W^{-1/2}``
(symmetric) and ``S = Lh^{1/2}`` the matrix ``S J S`` is symmetric and
similar to ``B``.  Its eigenvectors ``u_i`` give eigenvectors of ``B`` via
``v_i ~ J S u_i``, which come out J-orthogonal with ``[v_i, v_i] = 1/lambda_i``
before normalisation.  Everything downstream works in the Krein-orthonormal
basis ``[v_i, v_j] = sgn(lambda_i) delta_ij``, where the intrinsic norms on
``H^B_+`` and ``H^B_-`` are plain Euclidean norms of the coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as la

from .discretize import DiscreteModel
from .errors import EndpointOnSpectrum, NearZeroEigenvalue


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KreinDecomposition:
    model: DiscreteModel
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    per_side_gamma: tuple = field(default=(1.0, 1.0), compare=False)
    per_side_beta: tuple = field(default=(0.0, 0.0), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _frozen(self.eigenvectors))

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @cached_property
    def krein_signs(self) -> np.ndarray:
        V = self.eigenvectors
        m = self.model
        return _frozen(np.sign(np.einsum("ij,ij->j", V, (m.J_diag * m.weight_masses)[:, None] * V)))

    @property
    def pos(self) -> np.ndarray:
        return self.eigenvalues > 0

    @property
    def neg(self) -> np.ndarray:
        return self.eigenvalues < 0

    @property
    def lam_plus(self) -> np.ndarray:
        return self.eigenvalues[self.pos]

    @property
    def lam_minus(self) -> np.ndarray:
        return self.eigenvalues[self.neg]

    @property
    def V_plus(self) -> np.ndarray:
        return self.eigenvectors[:, self.pos]

    @property
    def V_minus(self) -> np.ndarray:
        return self.eigenvectors[:, self.neg]

    @cached_property
    def coefficient_map(self) -> np.ndarray:
        """``C`` with ``h = V @ (C @ h)``: ``c_i = kappa_i [h, v_i]``."""
        m = self.model
        return _frozen(self.krein_signs[:, None] * (self.eigenvectors * (m.J_diag * m.weight_masses)[:, None]).T)

    def coefficients(self, h):
        """Krein-orthonormal coordinates of ``h`` (last axis), split as (plus, minus)."""
        c = np.asarray(h) @ self.coefficient_map.T
        return c[..., self.pos], c[..., self.neg]

    @cached_property
    def Pplus(self) -> np.ndarray:
        return _frozen(self.V_plus @ self.coefficient_map[self.pos])

    @cached_property
    def Pminus(self) -> np.ndarray:
        return _frozen(self.V_minus @ self.coefficient_map[self.neg])

    @property
    def gamma(self) -> float:
        return float(min(self.per_side_gamma))

    @property
    def beta_proj(self) -> float:
        return float(max(self.per_side_beta))

    @property
    def min_abs_eigenvalue(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))

    def eigen_residual(self) -> float:
        """``max_i ||B v_i - lambda_i v_i|| / (||B|| ||v_i||)`` in the W-norm."""
        B = self.model.B_mat
        V = self.eigenvectors
        R = B @ V - V * self.eigenvalues
        sw = np.sqrt(self.model.weight_masses)[:, None]
        nB = np.linalg.norm(sw * B / sw.T, 2)
        return float(np.max(np.linalg.norm(sw * R, axis=0) / (nB * np.linalg.norm(sw * V, axis=0))))

    def krein_gram(self) -> np.ndarray:
        V = self.eigenvectors
        m = self.model
        return V.T @ ((m.J_diag * m.weight_masses)[:, None] * V)


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return V * s


def decompose(m: DiscreteModel, rel_zero: float = 1e-12) -> KreinDecomposition:
    """Real eigenpairs of ``B = J L`` through the symmetric pencil ``S J S``."""
    sw = np.sqrt(m.weight_masses)
    Lh = sw[:, None] * m.L_mat / sw[None, :]
    Lh = 0.5 * (Lh + Lh.T)
    ell, U = la.eigh(Lh)
    if ell[0] <= 0:
        raise NearZeroEigenvalue(f"L is not positive: smallest W-eigenvalue {ell[0]:.3e}")
    S = (U * np.sqrt(ell)) @ U.T
    Mmat = S @ (m.J_diag[:, None] * S)
    Mmat = 0.5 * (Mmat + Mmat.T)
    lam, Umat = la.eigh(Mmat)
    big = np.max(np.abs(lam))
    if np.min(np.abs(lam)) < rel_zero * big:
        raise NearZeroEigenvalue(f"min |lambda| = {np.min(np.abs(lam)):.3e} vs max {big:.3e}")
    # v_hat = sgn(lam) J S u / sqrt|lam| has [v, v] = sgn(lam)
    Vh = (m.J_diag[:, None] * (S @ Umat)) * (np.sign(lam) / np.sqrt(np.abs(lam)))
    V = _fix_signs(Vh / sw[:, None])
    k = KreinDecomposition(m, lam, V)
    gam, beta = _embedding(k)
    object.__setattr__(k, "per_side_gamma", gam)
    object.__setattr__(k, "per_side_beta", beta)
    return k


def _embedding(k: KreinDecomposition):
    m = k.model
    sw = np.sqrt(m.weight_masses)[:, None]
    gam = []
    for V in (k.V_plus, k.V_minus):
        gam.append(1.0 / np.linalg.norm(sw * V, 2) if V.shape[1] else 1.0)
    C = k.coefficient_map
    beta = []
    for own, other, coords in ((k.pos, k.neg, m.plus_mask), (k.neg, k.pos, m.minus_mask)):
        if not own.any() or not other.any():
            beta.append(0.0)
            continue
        # g ranges over H_+ (resp. H_-), scaled so that ||g||_W = ||y||
        E = np.diag(1.0 / np.sqrt(m.weight_masses))[:, coords]
        X_own = C[own] @ E
        X_other = C[other] @ E
        beta.append(float(np.linalg.norm(la.solve(X_own.T, X_other.T).T, 2)))
    return (float(gam[0]), float(gam[1])), (float(beta[0]), float(beta[1]))


def embedding_constants(k: KreinDecomposition) -> tuple[float, float]:
    """``(gamma, beta_proj)``: the norm-equivalence and projection constants."""
    return k.gamma, k.beta_proj


def from_cache(model: DiscreteModel, eigenvalues, eigenvectors) -> KreinDecomposition:
    k = KreinDecomposition(model, eigenvalues, eigenvectors)
    gam, beta = _embedding(k)
    object.__setattr__(k, "per_side_gamma", gam)
    object.__setattr__(k, "per_side_beta", beta)
    return k


def _members(k, intervals, tol):
    lam = k.eigenvalues
    scale = np.max(np.abs(lam))
    sel = np.zeros(lam.size, dtype=bool)
    for lo, hi in intervals:
        if not lo < hi:
            continue
        for e in (lo, hi):
            if np.isfinite(e) and np.any(np.abs(lam - e) <= tol * scale):
                raise EndpointOnSpectrum(f"interval endpoint {e} is within tolerance of an eigenvalue")
        sel |= (lam > lo) & (lam < hi)
    return sel


def spectral_projection(k: KreinDecomposition, *intervals, tol: float = 1e-12) -> np.ndarray:
    """``E(Delta)`` for a union of open intervals ``(lo, hi)`` (``+-inf`` allowed)."""
    sel = _members(k, intervals, tol)
    return k.eigenvectors[:, sel] @ k.coefficient_map[sel]


def krein_adjoint(k: KreinDecomposition, A) -> np.ndarray:
    """``A^[*] = J A^* J`` with ``A^* = W^{-1} A^T W``."""
    m = k.model
    W, J = m.weight_masses, m.J_diag
    return (J / W)[:, None] * A.T * (W * J)[None, :]


def spectral_function_residuals(k: KreinDecomposition, d1, d2) -> dict:
    """Spectral-function identities checked on two intervals ``d1``, ``d2``.

    Returns the worst residual per property; sign-definiteness is reported as
    the smallest value of ``+-[h, h]`` over unit vectors in the range (must be > 0).
    """
    B = k.model.B_mat
    n = k.n
    E1 = spectral_projection(k, d1)
    E2 = spectral_projection(k, d2)
    lo, hi = max(d1[0], d2[0]), min(d1[1], d2[1])
    Ecap = spectral_projection(k, (lo, hi)) if lo < hi else np.zeros((n, n))
    res = {
        "idempotent": float(np.max(np.abs(E1 @ E1 - E1))),
        "multiplicative": float(np.max(np.abs(Ecap - E1 @ E2))),
        "whole_line": float(np.max(np.abs(spectral_projection(k, (-np.inf, 0.0), (0.0, np.inf)) - np.eye(n)))),
        "empty": float(np.max(np.abs(spectral_projection(k)))) if n else 0.0,
        "selfadjoint": float(np.max(np.abs(krein_adjoint(k, E1) - E1))),
        "commutes": float(np.max(np.abs(E1 @ B - B @ E1)) / max(np.max(np.abs(B)), 1.0)),
    }
    if d1[1] <= d2[0] or d2[1] <= d1[0]:
        res["additive"] = float(np.max(np.abs(spectral_projection(k, d1, d2) - E1 - E2)))
    m = k.model
    definiteness = np.inf
    for d in (d1, d2):
        sel = _members(k, [d], 1e-12)
        if not sel.any():
            continue
        side = np.sign(k.eigenvalues[sel])
        if np.all(side > 0) or np.all(side < 0):
            Q = la.orth(np.sqrt(m.weight_masses)[:, None] * k.eigenvectors[:, sel])
            Q = Q / np.sqrt(m.weight_masses)[:, None]
            G = side[0] * Q.T @ ((m.J_diag * m.weight_masses)[:, None] * Q)
            definiteness = min(definiteness, float(la.eigvalsh(0.5 * (G + G.T))[0]))
    res["definiteness"] = definiteness
    spec_err = 0.0
    for d, E in ((d1, E1), (d2, E2)):
        sel = _members(k, [d], 1e-12)
        if sel.any():
            Bd = B @ E
            ev = np.linalg.eigvals(Bd)
            lam = k.eigenvalues[sel]
            far = [e for e in ev if abs(e) > 1e-9 * np.max(np.abs(k.eigenvalues))]
            spec_err = max(spec_err, max((min(abs(e - lam)) for e in far), default=0.0))
    res["spectrum_in_range"] = float(spec_err)
    return res
