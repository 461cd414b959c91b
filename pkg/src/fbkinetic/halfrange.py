"""Homogeneous half-range problems ``psi' = -B psi`` on a slab or half-line.

With ``B`` diagonal in the Krein-orthonormal eigenbasis, a solution is fixed
by the coordinates ``a`` of ``psi_+(0)`` (positive modes) and ``b`` of
``psi_-(tau)`` (negative modes).  The half-range conditions
``P+ psi(0) = phi+`` and ``P- psi(tau) = phi-`` become

    a + G_- b = R_+ phi_+,        b + G_+ a = R_- phi_-

with ``R_pm = (P_pm restricted to H^B_pm)^{-1}`` and the contractions
``G_+ = R_- P_- exp(-tau B+)``, ``G_- = R_+ P_+ exp(tau B-)``.  All operator
norms below are intrinsic norms, i.e. Euclidean norms of mode coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import (
    BoundaryDataError,
    ContractionViolated,
    IllConditionedRestriction,
    NeumannStall,
    OutOfSlab,
    SolverDisagreement,
)
from .krein import KreinDecomposition

INFINITY = math.inf


@dataclass(frozen=True)
class BoundaryData:
    """Half-range data: ``phi_plus`` on the J=+1 coordinates, ``phi_minus`` on J=-1."""

    phi_plus: np.ndarray
    phi_minus: np.ndarray | None
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "phi_plus", np.asarray(self.phi_plus, dtype=float))
        if self.phi_minus is not None:
            object.__setattr__(self, "phi_minus", np.asarray(self.phi_minus, dtype=float))
        tau = float(self.tau)
        if not tau > 0:
            raise BoundaryDataError("slab length tau must be positive")
        if math.isinf(tau) and self.phi_minus is not None:
            raise BoundaryDataError("half-space data must not carry phi_minus")
        if not math.isinf(tau) and self.phi_minus is None:
            object.__setattr__(self, "phi_minus", np.zeros_like(self.phi_plus))
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_full(cls, model, phi, tau, phi_right=None) -> "BoundaryData":
        """Mask full vectors: ``P+ phi`` at ``x = 0`` and ``P- phi_right`` at ``x = tau``."""
        phi = np.asarray(phi, dtype=float)
        right = phi if phi_right is None else np.asarray(phi_right, dtype=float)
        plus = np.where(model.plus_mask, phi, 0.0)
        if math.isinf(float(tau)):
            return cls(plus, None, tau)
        return cls(plus, np.where(model.minus_mask, right, 0.0), tau)

    @property
    def halfspace(self) -> bool:
        return math.isinf(self.tau)

    def validate(self, model) -> None:
        n = model.n
        if self.phi_plus.shape != (n,):
            raise BoundaryDataError(f"phi_plus has shape {self.phi_plus.shape}, expected ({n},)")
        if np.any(self.phi_plus[model.minus_mask] != 0):
            raise BoundaryDataError("phi_plus must vanish on the J = -1 coordinates")
        if self.phi_minus is not None:
            if self.phi_minus.shape != (n,):
                raise BoundaryDataError(f"phi_minus has shape {self.phi_minus.shape}, expected ({n},)")
            if np.any(self.phi_minus[model.plus_mask] != 0):
                raise BoundaryDataError("phi_minus must vanish on the J = +1 coordinates")


@dataclass(frozen=True)
class RMaps:
    """``R_pm``: inverse of the coordinate projection ``P_pm`` on ``H^B_pm``."""

    k: KreinDecomposition
    lu_plus: tuple | None
    lu_minus: tuple | None
    cond_plus: float
    cond_minus: float

    def plus_coords(self, phi_plus):
        """Eigen-coordinates ``c`` with ``R_+ phi_+ = V_+ c``."""
        if self.lu_plus is None:
            return np.zeros(0)
        rhs = np.asarray(phi_plus)[..., self.k.model.plus_mask]
        return la.lu_solve(self.lu_plus, rhs.T).T

    def minus_coords(self, phi_minus):
        if self.lu_minus is None:
            return np.zeros(0)
        rhs = np.asarray(phi_minus)[..., self.k.model.minus_mask]
        return la.lu_solve(self.lu_minus, rhs.T).T

    def apply_plus(self, phi_plus):
        return self.plus_coords(phi_plus) @ self.k.V_plus.T

    def apply_minus(self, phi_minus):
        return self.minus_coords(phi_minus) @ self.k.V_minus.T


def _lu(X, limit, side):
    if X.size == 0:
        return None, 1.0
    cond = float(np.linalg.cond(X))
    if not np.isfinite(cond) or cond > limit:
        raise IllConditionedRestriction(f"P{side} restricted to H^B_{side} has condition number {cond:.3e}")
    return la.lu_factor(X), cond


def build_R(k: KreinDecomposition, cond_limit: float = 1e12) -> RMaps:
    m = k.model
    Xp = k.V_plus[m.plus_mask]
    Xm = k.V_minus[m.minus_mask]
    if Xp.shape[0] != Xp.shape[1] or Xm.shape[0] != Xm.shape[1]:
        raise IllConditionedRestriction(
            f"signature mismatch: {Xp.shape[1]} positive modes vs {Xp.shape[0]} J=+1 coordinates"
        )
    lu_p, cond_p = _lu(Xp, cond_limit, "+")
    lu_m, cond_m = _lu(Xm, cond_limit, "-")
    return RMaps(k, lu_p, lu_m, cond_p, cond_m)


@dataclass(frozen=True)
class GMaps:
    """Coordinate matrices of ``G_+ : H^B_+ -> H^B_-`` and ``G_- : H^B_- -> H^B_+``."""

    G_plus: np.ndarray
    G_minus: np.ndarray
    tau: float

    @property
    def norm_plus(self) -> float:
        return float(np.linalg.norm(self.G_plus, 2)) if self.G_plus.size else 0.0

    @property
    def norm_minus(self) -> float:
        return float(np.linalg.norm(self.G_minus, 2)) if self.G_minus.size else 0.0


def build_G(k: KreinDecomposition, tau: float, R: RMaps | None = None, check: bool = True) -> GMaps:
    if not tau > 0 or math.isinf(tau):
        raise ValueError("build_G needs a finite tau > 0")
    R = build_R(k) if R is None else R
    m = k.model
    decay_p = np.exp(-tau * k.lam_plus)
    decay_m = np.exp(tau * k.lam_minus)
    npl, nmi = k.lam_plus.size, k.lam_minus.size
    if npl and nmi:
        Gp = la.lu_solve(R.lu_minus, k.V_plus[m.minus_mask]) * decay_p
        Gm = la.lu_solve(R.lu_plus, k.V_minus[m.plus_mask]) * decay_m
    else:
        Gp, Gm = np.zeros((nmi, npl)), np.zeros((npl, nmi))
    G = GMaps(Gp, Gm, float(tau))
    if check:
        for name, val in (("G_+", G.norm_plus), ("G_-", G.norm_minus)):
            if not val < 1:
                raise ContractionViolated(f"||{name}|| = {val:.6g} >= 1")
    return G


def _neumann(GG, rhs, q, tol, max_iter):
    if not np.any(rhs):
        return np.zeros_like(rhs), 0
    if q <= 0:
        return rhs.copy(), 1
    bound = math.ceil(math.log(tol * (1 - q) / 4) / math.log(q)) + 5 if q < 1 else max_iter
    bound = min(max(bound, 5), max_iter)
    x = rhs.copy()
    for it in range(1, bound + 1):
        new = rhs + GG @ x
        step = np.linalg.norm(new - x)
        x = new
        if step <= tol * np.linalg.norm(x):
            return x, it
    raise NeumannStall(f"no convergence within {bound} iterations (contraction bound {q:.4g})")


def solve_boundary_system(k: KreinDecomposition, R: RMaps, G: GMaps, bd: BoundaryData,
                          neumann: bool = False, tol: float = 1e-14, agree: float = 1e-8,
                          max_iter: int = 100000):
    """Coordinates ``(a, b)`` of ``psi_+(0)`` and ``psi_-(tau)``.

    The factored solve of ``(I - G-G+) a = R+phi+ - G- R-phi-`` and
    ``(I - G+G-) b = R-phi- - G+ R+phi+`` is returned.  With ``neumann=True``
    the same systems are also summed as geometric series and the two routes
    must agree to ``agree`` (relative).
    """
    if bd.halfspace:
        raise ValueError("use solve_halfspace for tau = inf")
    bd.validate(k.model)
    rp = R.plus_coords(bd.phi_plus)
    rm = R.minus_coords(bd.phi_minus)
    Gp, Gm = G.G_plus, G.G_minus
    rhs_a = rp - Gm @ rm if Gm.size else rp
    rhs_b = rm - Gp @ rp if Gp.size else rm
    A_a = Gm @ Gp if Gm.size else np.zeros((rp.size, rp.size))
    A_b = Gp @ Gm if Gp.size else np.zeros((rm.size, rm.size))
    a = np.linalg.solve(np.eye(rp.size) - A_a, rhs_a) if rp.size else rp
    b = np.linalg.solve(np.eye(rm.size) - A_b, rhs_b) if rm.size else rm
    diag = {"norm_G_plus": G.norm_plus, "norm_G_minus": G.norm_minus,
            "cond_R_plus": R.cond_plus, "cond_R_minus": R.cond_minus}
    if neumann:
        q = G.norm_plus * G.norm_minus
        an, ia = _neumann(A_a, rhs_a, q, tol, max_iter)
        bn, ib = _neumann(A_b, rhs_b, q, tol, max_iter)
        scale = max(np.linalg.norm(a), np.linalg.norm(b), np.finfo(float).tiny)
        gap = max(np.linalg.norm(a - an), np.linalg.norm(b - bn)) / scale
        diag.update(neumann_iterations=(ia, ib), neumann_disagreement=float(gap))
        if gap > agree:
            raise SolverDisagreement(f"direct and Neumann solutions differ by {gap:.3e} (relative)")
    return a, b, diag


@dataclass(frozen=True)
class HalfRangeSolution:
    decomposition: KreinDecomposition
    coeff_plus: np.ndarray
    coeff_minus: np.ndarray
    tau: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        slack = 1e-12 * (1.0 if math.isinf(self.tau) else max(1.0, self.tau))
        if np.any(x < -slack) or np.any(x > self.tau + slack) or np.any(np.isnan(x)):
            raise OutOfSlab(f"x outside [0, {self.tau}]")
        return np.clip(x, 0.0, self.tau)

    def mode_coordinates(self, x):
        """Intrinsic coordinates ``(plus, minus)`` of ``psi(x)``; rows follow ``x``."""
        x = np.atleast_1d(self._check_x(x))
        k = self.decomposition
        plus = self.coeff_plus * np.exp(-np.outer(x, k.lam_plus))
        if math.isinf(self.tau) or self.coeff_minus.size == 0:
            minus = np.zeros((x.size, k.lam_minus.size))
        else:
            minus = self.coeff_minus * np.exp(np.outer(self.tau - x, k.lam_minus))
        return plus, minus

    def evaluate(self, x):
        scalar = np.ndim(x) == 0
        plus, minus = self.mode_coordinates(x)
        k = self.decomposition
        out = plus @ k.V_plus.T + minus @ k.V_minus.T
        return out[0] if scalar else out

    __call__ = evaluate

    def derivative(self, x):
        """``d psi/dx`` mode by mode (equals ``-B psi(x)``)."""
        scalar = np.ndim(x) == 0
        plus, minus = self.mode_coordinates(x)
        k = self.decomposition
        out = -(plus * k.lam_plus) @ k.V_plus.T - (minus * k.lam_minus) @ k.V_minus.T
        return out[0] if scalar else out

    def intrinsic_norms(self, x):
        plus, minus = self.mode_coordinates(x)
        return np.linalg.norm(plus, axis=1), np.linalg.norm(minus, axis=1)


def evaluate_solution(s: HalfRangeSolution, x):
    return s.evaluate(x)


def _relative(r, data, value):
    # relative to the data; zero data falls back to the size of psi there
    scale = np.linalg.norm(data)
    if scale == 0:
        scale = np.linalg.norm(value)
    return float(np.linalg.norm(r) / scale) if scale > 0 else float(np.linalg.norm(r))


def boundary_residuals(s, bd: BoundaryData) -> dict:
    """Relative residuals of ``P+ psi(0) = phi+`` and ``P- psi(tau) = phi-``."""
    m = s.decomposition.model
    return boundary_residuals_from_values(m, bd, s.evaluate(0.0), None if bd.halfspace else s.evaluate(bd.tau))


def boundary_residuals_from_values(m, bd: BoundaryData, psi0, psit=None) -> dict:
    out = {"plus": _relative(psi0[m.plus_mask] - bd.phi_plus[m.plus_mask], bd.phi_plus, psi0)}
    if psit is not None:
        out["minus"] = _relative(psit[m.minus_mask] - bd.phi_minus[m.minus_mask], bd.phi_minus, psit)
    return out


def solve(k: KreinDecomposition, bd: BoundaryData, neumann: bool = False, R: RMaps | None = None,
          G: GMaps | None = None) -> HalfRangeSolution:
    """Finite-slab or half-space solve, dispatching on ``bd.tau``."""
    if bd.halfspace:
        return solve_halfspace(k, bd.phi_plus, R=R)
    R = build_R(k) if R is None else R
    G = build_G(k, bd.tau, R) if G is None else G
    a, b, diag = solve_boundary_system(k, R, G, bd, neumann=neumann)
    s = HalfRangeSolution(k, a, b, bd.tau, diag)
    diag["bc_residual"] = boundary_residuals(s, bd)
    return s


def solve_halfspace(k: KreinDecomposition, phi_plus, R: RMaps | None = None) -> HalfRangeSolution:
    """``psi(x) = exp(-x B+) R+ phi+``; the negative-mode part is identically zero."""
    bd = BoundaryData(phi_plus, None, INFINITY)
    bd.validate(k.model)
    R = build_R(k) if R is None else R
    a = R.plus_coords(bd.phi_plus)
    s = HalfRangeSolution(k, a, np.zeros(0), INFINITY, {"cond_R_plus": R.cond_plus})
    s.diagnostics["bc_residual"] = boundary_residuals(s, bd)
    return s
