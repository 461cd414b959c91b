"""Brute-force reference solvers that share nothing with the spectral route.

``brute_force_bvp`` discretises ``psi' + B psi = f`` on an x-grid graded toward
both ends with centered differences (second-order one-sided stencils at the two ends) and
solves the whole space-time system at once.  At ``x = 0`` the J=+1 rows carry
the boundary data and the J=-1 rows keep the equation; at ``x = tau`` the
roles swap.  ``direct_block_solve`` solves the coupled boundary system for the
mode coordinates as one dense linear system.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid

from .discretize import DiscreteModel
from .errors import SingularSystem


@dataclass(frozen=True)
class SpaceTimeSolution:
    x: np.ndarray
    values: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __call__(self, xq):
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        return np.column_stack([np.interp(xq, self.x, self.values[:, i]) for i in range(self.values.shape[1])])


def x_grid(tau: float, nx: int, grading: float = 1.0) -> np.ndarray:
    """Points on ``[0, tau]`` clustered symmetrically toward both ends as ``s^grading``."""
    if grading <= 0:
        raise ValueError("grading must be positive")
    s = np.linspace(-1.0, 1.0, nx)
    return 0.5 * tau * (1.0 + np.sign(s) * (1.0 - (1.0 - np.abs(s)) ** grading))


def derivative_matrix(x) -> sp.csr_matrix:
    """Three-point centered first derivative on a (possibly nonuniform) grid.

    End rows use the second-order one-sided three-point formula.
    """
    x = np.asarray(x, dtype=float)
    nx = x.size
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    rows = np.repeat(np.arange(1, nx - 1), 3)
    cols = (np.arange(1, nx - 1)[:, None] + np.array([-1, 0, 1])).ravel()
    vals = np.column_stack([-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))]).ravel()

    def one_sided(h1, h2):
        # weights for f(0), f(h1), f(h1 + h2) giving f'(0)
        return np.array([-(2 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))])

    first = one_sided(x[1] - x[0], x[2] - x[1])
    last = -one_sided(x[-1] - x[-2], x[-2] - x[-3])
    rows = np.r_[[0, 0, 0], rows, [nx - 1] * 3]
    cols = np.r_[[0, 1, 2], cols, [nx - 1, nx - 2, nx - 3]]
    vals = np.r_[first, vals, last]
    return sp.csr_matrix((vals, (rows, cols)), shape=(nx, nx))


def _forcing_samples(f, x, n):
    if f is None:
        return np.zeros((x.size, n))
    vals = np.asarray(f(x), dtype=float)
    if vals.shape != (x.size, n):
        raise ValueError(f"forcing returned shape {vals.shape}, expected {(x.size, n)}")
    return vals


def brute_force_bvp(m: DiscreteModel, bd, f=None, nx: int = 400, grading: float = 2.0,
                    tol: float = 1e-9) -> SpaceTimeSolution:
    """Space-time finite-difference solve; ``f`` is any callable ``x -> (len(x), n)`` or None.

    ``grading > 1`` clusters the x-grid toward both ends to resolve the
    boundary layers of the stiff modes.
    """
    tau = float(bd.tau)
    if math.isinf(tau):
        raise ValueError("the space-time oracle needs a finite slab")
    if nx < 3:
        raise ValueError("nx must be >= 3")
    n = m.n
    x = x_grid(tau, nx, grading)
    B = sp.csr_matrix(m.B_mat)
    B.eliminate_zeros()
    K = (sp.kron(derivative_matrix(x), sp.identity(n))
         + sp.kron(sp.identity(nx), B)).tolil()
    rhs = _forcing_samples(f, x, n).ravel()

    plus = np.flatnonzero(m.plus_mask)
    minus = np.flatnonzero(m.minus_mask)
    bc_rows = np.r_[plus, (nx - 1) * n + minus]
    for r in bc_rows:
        K.rows[r] = [r]
        K.data[r] = [1.0]
    rhs[plus] = bd.phi_plus[plus]
    rhs[(nx - 1) * n + minus] = bd.phi_minus[minus]

    K = K.tocsc()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            lu = spla.splu(K)
    except (RuntimeError, spla.MatrixRankWarning) as e:
        raise SingularSystem(f"space-time system is singular: {e}") from e
    u = lu.solve(rhs)
    if not np.all(np.isfinite(u)):
        raise SingularSystem("space-time solve produced non-finite values")
    scale = spla.norm(K, np.inf) * np.linalg.norm(u, np.inf) + np.linalg.norm(rhs, np.inf)
    res = float(np.linalg.norm(K @ u - rhs, np.inf) / max(scale, np.finfo(float).tiny))
    if res > tol:
        raise SingularSystem(f"space-time solver residual {res:.3e} exceeds {tol:.1e}; system is near-singular")
    diag = {"size": int(K.shape[0]), "nnz": int(K.nnz), "residual": res, "grading": grading}
    return SpaceTimeSolution(x, u.reshape(nx, n), diag)


def richardson(m: DiscreteModel, bd, f=None, nx: int = 400, grading: float = 2.0) -> SpaceTimeSolution:
    """Combine grids ``nx`` and ``2 nx - 1`` to cancel the O(dx^2) term."""
    coarse = brute_force_bvp(m, bd, f, nx, grading)
    fine = brute_force_bvp(m, bd, f, 2 * nx - 1, grading)
    vals = (4.0 * fine.values[::2] - coarse.values) / 3.0
    diag = {"size": fine.diagnostics["size"], "residual": max(coarse.diagnostics["residual"],
                                                               fine.diagnostics["residual"])}
    return SpaceTimeSolution(coarse.x, vals, diag)


def direct_block_solve(k, R, tau, bd):
    """Mode coordinates ``(a, b)`` of ``psi_+(0)`` and ``psi_-(tau)`` from one monolithic solve.

    ``R`` is accepted for signature parity with the factored route and is not
    used: the block system is built from eigenvectors alone.
    """
    if math.isinf(float(tau)):
        raise ValueError("block solve needs a finite slab")
    m = k.model
    p, q = m.plus_mask, m.minus_mask
    Vp, Vm = k.V_plus, k.V_minus
    Dp = np.exp(-tau * k.lam_plus)
    Dm = np.exp(tau * k.lam_minus)
    top = np.hstack([Vp[p], Vm[p] * Dm])
    bottom = np.hstack([Vp[q] * Dp, Vm[q]])
    A = np.vstack([top, bottom])
    rhs = np.r_[bd.phi_plus[p], bd.phi_minus[q]]
    try:
        lu = la.lu_factor(A, check_finite=True)
    except (la.LinAlgError, ValueError) as e:
        raise SingularSystem(str(e)) from e
    if np.min(np.abs(np.diag(lu[0]))) <= np.finfo(float).eps * np.max(np.abs(A)):
        raise SingularSystem("boundary block system is singular")
    sol = la.lu_solve(lu, rhs)
    npl = Vp.shape[1]
    return sol[:npl], sol[npl:]


def l2_delta(m: DiscreteModel, x, ref, other) -> dict:
    """Relative ``L^2(x; H)`` difference (trapezoid in ``x``) and per-x deltas.

    Per-x deltas are ``||ref(x) - other(x)||_W`` over the RMS of ``||ref||_W``
    so they stay finite where the solution vanishes.
    """
    x = np.asarray(x, dtype=float)
    d = np.sqrt(((ref - other) ** 2) @ m.weight_masses)
    r = np.sqrt((ref ** 2) @ m.weight_masses)
    rel = float(math.sqrt(trapezoid(d * d, x) / max(trapezoid(r * r, x), np.finfo(float).tiny)))
    rms = math.sqrt(max(float(np.mean(r * r)), np.finfo(float).tiny))
    per_x = d / rms
    return {"relative_l2": rel, "per_x": per_x, "max_per_x": float(np.max(per_x))}
