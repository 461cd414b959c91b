"""Nonhomogeneous problems ``psi' = -B psi + f`` via Duhamel integrals.

The forcing is piecewise linear in ``x`` (Hoelder with exponent 1 on every
finite interval).  Projected onto the eigenbasis, each mode's convolution with
the semigroup is integrated exactly on every segment by the kernels in
``_backend``; beyond the last sample the half-space forcing follows a declared
tail model (``zero``, ``exponential`` with a rate, or ``constant``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import halfrange
from ._backend import kernels
from .errors import TailNotIntegrable
from .halfrange import BoundaryData
from .krein import KreinDecomposition

TAILS = ("zero", "exponential", "constant")


@dataclass(frozen=True)
class ForcingFunction:
    xs: np.ndarray
    values: np.ndarray
    tail: str = "constant"
    rate: float | None = None
    holder: tuple | None = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if xs.ndim != 1 or xs.size < 2 or vals.shape[0] != xs.size:
            raise ValueError("need >= 2 samples with one value row per abscissa")
        if xs[0] != 0.0:
            raise ValueError("forcing samples must start at x = 0")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("forcing abscissae must be strictly increasing")
        if self.tail not in TAILS:
            raise ValueError(f"tail must be one of {TAILS}")
        if self.tail == "exponential" and not (self.rate and self.rate > 0):
            raise ValueError("exponential tail needs a positive rate")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, vec, x_end, tail="constant", rate=None) -> "ForcingFunction":
        vec = np.asarray(vec, dtype=float)
        return cls(np.array([0.0, float(x_end)]), np.vstack([vec, vec]), tail=tail, rate=rate)

    @classmethod
    def zero(cls, n, x_end=1.0) -> "ForcingFunction":
        return cls(np.array([0.0, float(x_end)]), np.zeros((2, n)), tail="zero")

    @classmethod
    def sampled(cls, fun, xs, tail="constant", rate=None) -> "ForcingFunction":
        xs = np.asarray(xs, dtype=float)
        return cls(xs, np.array([fun(x) for x in xs]), tail=tail, rate=rate)

    @property
    def x_end(self) -> float:
        return float(self.xs[-1])

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def integrable(self) -> bool:
        """Whether ``int_0^inf ||f(x)|| dx`` is finite under the declared tail."""
        return self.tail != "constant" or not np.any(self.values[-1])

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((x.size, self.values.shape[1]))
        inside = x <= self.xs[-1]
        for i in range(self.values.shape[1]):
            out[inside, i] = np.interp(x[inside], self.xs, self.values[:, i])
        if np.any(~inside):
            d = x[~inside] - self.xs[-1]
            last = self.values[-1]
            if self.tail == "zero":
                out[~inside] = 0.0
            elif self.tail == "constant":
                out[~inside] = last
            else:
                out[~inside] = np.exp(-self.rate * d)[:, None] * last
        return out


def _restrict(f: ForcingFunction, tau: float):
    """Breakpoints and values of ``f`` on ``[0, tau]``."""
    if f.xs[-1] < tau * (1 - 1e-12):
        raise ValueError(f"forcing samples end at {f.xs[-1]} < tau = {tau}")
    keep = f.xs < tau
    xb = np.r_[f.xs[keep], tau]
    vals = np.vstack([f.values[keep], f(tau)])
    return xb, vals


@dataclass(frozen=True)
class ParticularSolutions:
    """Evaluators of ``psi_1^+`` and ``psi_1^-`` in mode coordinates and in ``H``."""

    decomposition: KreinDecomposition
    forcing: ForcingFunction
    tau: float
    xb: np.ndarray
    Fp: np.ndarray
    Fm: np.ndarray
    Ip: np.ndarray
    Km: np.ndarray
    tail_value: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    def _tail_plus(self, d):
        lam = self.decomposition.lam_plus
        f = self.forcing
        if f.tail != "exponential":
            return np.zeros((d.size, lam.size))
        r = f.rate
        dd = d[:, None]
        return (self.Fp[-1] * np.exp(-np.minimum(lam, r) * dd) * dd
                * kernels.phi1(np.abs(lam - r) * dd))

    def plus_coords(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lam = self.decomposition.lam_plus
        out = np.zeros((x.size, lam.size))
        if lam.size == 0:
            return out
        X = self.xb[-1]
        inside = x <= X
        if np.any(inside):
            out[inside] = kernels.eval_forward(lam, self.xb, self.Fp, self.Ip, x[inside])
        if np.any(~inside):
            d = x[~inside] - X
            out[~inside] = np.exp(-np.outer(d, lam)) * self.Ip[-1] + self._tail_plus(d)
        return out

    def minus_coords(self, x):
        """Coordinates of ``psi_1^-`` (carrying its minus sign)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        mu = -self.decomposition.lam_minus
        out = np.zeros((x.size, mu.size))
        if mu.size == 0:
            return out
        X = self.xb[-1]
        inside = x <= X
        if np.any(inside):
            out[inside] = -kernels.eval_backward(mu, self.xb, self.Fm, self.Km, x[inside])
        if np.any(~inside):
            f = self.forcing
            if f.tail == "exponential":
                d = x[~inside] - X
                out[~inside] = -np.exp(-f.rate * d)[:, None] * (self.Fm[-1] / (mu + f.rate))
        return out

    def plus(self, x):
        return self.plus_coords(x) @ self.decomposition.V_plus.T

    def minus(self, x):
        return self.minus_coords(x) @ self.decomposition.V_minus.T


def particular_solutions(k: KreinDecomposition, f: ForcingFunction, tau: float) -> ParticularSolutions:
    """``psi_1^+(x) = int_0^x U_+(x-y) f_+(y) dy``, ``psi_1^-(x) = -int_x^tau U_-(y-x) f_-(y) dy``."""
    if math.isinf(tau):
        if not f.integrable():
            raise TailNotIntegrable("forcing has a non-vanishing constant tail on [0, inf)")
        xb, vals = f.xs, f.values
    else:
        xb, vals = _restrict(f, tau)
    Fp, Fm = k.coefficients(vals)
    lam_p = k.lam_plus
    mu = -k.lam_minus
    Ip = kernels.forward_scan(lam_p, xb, Fp) if lam_p.size else np.zeros((xb.size, 0))
    end = None
    if math.isinf(tau) and f.tail == "exponential" and mu.size:
        end = Fm[-1] / (mu + f.rate)
    Km = kernels.backward_scan(mu, xb, Fm, end) if mu.size else np.zeros((xb.size, 0))
    return ParticularSolutions(k, f, float(tau), xb, Fp, Fm, Ip, Km)


@dataclass(frozen=True)
class NonhomogeneousSolution:
    particular: ParticularSolutions
    homogeneous: halfrange.HalfRangeSolution
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def tau(self) -> float:
        return self.homogeneous.tau

    @property
    def decomposition(self) -> KreinDecomposition:
        return self.homogeneous.decomposition

    def evaluate(self, x):
        scalar = np.ndim(x) == 0
        xx = np.atleast_1d(self.homogeneous._check_x(x))
        out = self.particular.plus(xx) + self.particular.minus(xx) + self.homogeneous.evaluate(xx)
        return out[0] if scalar else out

    __call__ = evaluate

    def mode_coordinates(self, x):
        xx = np.atleast_1d(self.homogeneous._check_x(x))
        hp, hm = self.homogeneous.mode_coordinates(xx)
        return hp + self.particular.plus_coords(xx), hm + self.particular.minus_coords(xx)

    def derivative(self, x):
        """``-B psi + f`` assembled mode by mode."""
        scalar = np.ndim(x) == 0
        xx = np.atleast_1d(self.homogeneous._check_x(x))
        k = self.decomposition
        plus, minus = self.mode_coordinates(xx)
        fp, fm = k.coefficients(self.particular.forcing(xx))
        dp = -plus * k.lam_plus + fp
        dm = -minus * k.lam_minus + fm
        out = dp @ k.V_plus.T + dm @ k.V_minus.T
        return out[0] if scalar else out

    def intrinsic_norms(self, x):
        plus, minus = self.mode_coordinates(x)
        return np.linalg.norm(plus, axis=1), np.linalg.norm(minus, axis=1)


def equation_residual(sol, f: ForcingFunction, x) -> np.ndarray:
    """``||psi' + B psi - f|| / (||B|| ||psi|| + ||f||)`` at each ``x`` (W-norms)."""
    m = sol.decomposition.model
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = sol.evaluate(x)
    dpsi = sol.derivative(x)
    fx = f(x)
    r = dpsi + psi @ m.B_mat.T - fx
    sw = np.sqrt(m.weight_masses)
    nB = np.linalg.norm(sw[:, None] * m.B_mat / sw[None, :], 2)
    return m.norm(r) / (nB * m.norm(psi) + m.norm(fx))


def solve_nonhomogeneous(k: KreinDecomposition, bd: BoundaryData, f: ForcingFunction,
                         neumann: bool = False) -> NonhomogeneousSolution:
    """``psi = psi_1^+ + psi_1^- + psi_0`` with ``psi_0`` solving the adjusted homogeneous problem."""
    if bd.halfspace:
        return solve_nonhomogeneous_halfspace(k, bd.phi_plus, f)
    bd.validate(k.model)
    m = k.model
    ps = particular_solutions(k, f, bd.tau)
    at0 = ps.minus(0.0)[0]
    atT = ps.plus(bd.tau)[0]
    adjusted = BoundaryData(bd.phi_plus - np.where(m.plus_mask, at0, 0.0),
                            bd.phi_minus - np.where(m.minus_mask, atT, 0.0), bd.tau)
    psi0 = halfrange.solve(k, adjusted, neumann=neumann)
    sol = NonhomogeneousSolution(ps, psi0)
    sol.diagnostics.update(psi0.diagnostics)
    sol.diagnostics["bc_residual"] = halfrange.boundary_residuals(sol, bd)
    return sol


def solve_nonhomogeneous_halfspace(k: KreinDecomposition, phi_plus, f: ForcingFunction) -> NonhomogeneousSolution:
    m = k.model
    if not f.integrable():
        raise TailNotIntegrable("forcing is not integrable on [0, inf); declare a zero or exponential tail")
    ps = particular_solutions(k, f, math.inf)
    phi_plus = np.asarray(phi_plus, dtype=float)
    adjusted = phi_plus - np.where(m.plus_mask, ps.minus(0.0)[0], 0.0)
    psi0 = halfrange.solve_halfspace(k, adjusted)
    sol = NonhomogeneousSolution(ps, psi0)
    sol.diagnostics.update(psi0.diagnostics)
    sol.diagnostics["bc_residual"] = halfrange.boundary_residuals(sol, BoundaryData(phi_plus, None, math.inf))
    return sol
