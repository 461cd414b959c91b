"""Coefficient data ``(w, p, q)`` for forward-backward Sturm-Liouville problems.

The model equation is ``w(mu) psi_x = (p psi_mu)_mu - q psi`` on
``[-M, M]``.  Besides the presets this module runs the admissibility checks
used to decide whether the spectral half-range solver is applicable:
turning-point detection, one-sided power-law ("simple weight") certificates,
the tail integrals for single-turning-point weights with ``q = 0``, and the
uniform-positivity ratio ``q/|w|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .discretize import Grid, build_grid
from .errors import (
    AmbiguousSign,
    FitFailure,
    NonzeroPotential,
    NoSignChange,
    TailDivergence,
)

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PowerLawDescriptor:
    """Closed-form data of ``w = sgn(mu) r(mu) |mu|**alpha_pm``.

    ``r_limit`` holds the constants ``(c_minus, c_plus)`` that ``r`` tends to at
    ``-inf`` and ``+inf``.  ``beta`` and ``rho0`` describe the behaviour at the
    turning point ``mu0``.
    """

    alpha_plus: float
    alpha_minus: float
    r: Func
    r_limit: tuple[float, float]
    mu0: float = 0.0
    beta: float | None = None
    rho0: float | None = None


@dataclass(frozen=True)
class CoefficientSet:
    name: str
    w: Func
    p: Func
    q: Func
    M: float
    descriptor: PowerLawDescriptor | None = None
    symmetric: bool = False
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("truncation half-width M must be positive")

    def sample(self, mu):
        mu = np.asarray(mu, dtype=float)
        return self.w(mu), self.p(mu), self.q(mu)


def _ones(mu):
    return np.ones_like(np.asarray(mu, dtype=float))


def _const(value):
    def f(mu):
        return np.full_like(np.asarray(mu, dtype=float), float(value))
    return f


def signed_power(mu, alpha_plus, alpha_minus=None, r=None):
    """``sgn(mu) r(mu) |mu|**alpha`` with the exponent chosen by side; 0 at 0."""
    alpha_minus = alpha_plus if alpha_minus is None else alpha_minus
    mu = np.asarray(mu, dtype=float)
    a = np.abs(mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(mu > 0, a ** alpha_plus, a ** alpha_minus)
    if r is not None:
        mag = mag * r(mu)
    return np.where(mu == 0, 0.0, np.sign(mu) * mag)


def signum_power(alpha: float, k: float = 0.0, M: float = 4.0) -> CoefficientSet:
    """``sgn(mu)|mu|**alpha psi_x = psi_mumu - k psi``."""
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    desc = PowerLawDescriptor(alpha, alpha, _ones, (1.0, 1.0), 0.0, beta=alpha, rho0=1.0)
    return CoefficientSet(
        name="signum_power",
        w=lambda mu: signed_power(mu, alpha),
        p=_ones,
        q=_const(k),
        M=M,
        descriptor=desc,
        symmetric=True,
        params={"alpha": alpha, "k": k},
    )


def fokker_planck(a0: float = 1.0, a1: float = 0.0, a2: float = 0.0, M: float = 4.0) -> CoefficientSet:
    """``mu psi_x = b(mu) psi_mumu`` with ``b = a0 + a1|mu| + a2 mu**2``.

    Dividing by ``b`` gives the weight ``w = mu / b`` with ``p = 1`` and ``q = 0``.
    At infinity ``w ~ sgn(mu)|mu|**(1 - d) / a_d`` where ``d`` is the top degree.
    """
    coeffs = np.array([a0, a1, a2], dtype=float)
    if np.any(coeffs < 0) or not np.any(coeffs > 0):
        raise ValueError("b coefficients must be non-negative and not all zero")

    def b(mu):
        a = np.abs(np.asarray(mu, dtype=float))
        return a0 + a1 * a + a2 * a * a

    def w(mu):
        mu = np.asarray(mu, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = mu / b(mu)
        return np.where(mu == 0, 0.0, out)

    d = int(np.nonzero(coeffs)[0].max())
    alpha = 1.0 - d
    low = int(np.nonzero(coeffs)[0].min())
    beta = 1.0 - low

    def r(mu):
        a = np.abs(np.asarray(mu, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(w(mu)) * a ** (-alpha)

    c_inf = 1.0 / coeffs[d]
    desc = PowerLawDescriptor(alpha, alpha, r, (c_inf, c_inf), 0.0, beta=beta, rho0=1.0 / coeffs[low])
    return CoefficientSet(
        name="fokker_planck",
        w=w,
        p=_ones,
        q=_const(0.0),
        M=M,
        descriptor=desc,
        symmetric=True,
        params={"a0": a0, "a1": a1, "a2": a2},
    )


def make_r(kind: str = "constant", c: float = 1.0, amp: float = 0.0, s: float = 1.0) -> Func:
    """Prefactor families: ``c``, ``c + amp*exp(-mu^2)``, ``c + amp/(1+|mu|**s)``."""
    if kind == "constant":
        return _const(c)
    if kind == "gauss":
        return lambda mu: c + amp * np.exp(-np.asarray(mu, dtype=float) ** 2)
    if kind == "power":
        return lambda mu: c + amp / (1.0 + np.abs(np.asarray(mu, dtype=float)) ** s)
    raise ValueError(f"unknown r kind {kind!r}")


def power_with_r(alpha_plus: float, alpha_minus: float | None = None, r_kind: str = "constant",
                 c: float = 1.0, amp: float = 0.0, s: float = 1.0, M: float = 4.0) -> CoefficientSet:
    """``w = sgn(mu) r(mu) |mu|**alpha_pm``, ``p = 1``, ``q = 0``."""
    alpha_minus = alpha_plus if alpha_minus is None else alpha_minus
    r = make_r(r_kind, c, amp, s)
    r0 = float(r(np.array(0.0)))
    beta = alpha_plus if alpha_plus == alpha_minus else None
    desc = PowerLawDescriptor(alpha_plus, alpha_minus, r, (c, c), 0.0, beta=beta, rho0=r0)
    return CoefficientSet(
        name="power_with_r",
        w=lambda mu: signed_power(mu, alpha_plus, alpha_minus, r),
        p=_ones,
        q=_const(0.0),
        M=M,
        descriptor=desc,
        symmetric=alpha_plus == alpha_minus,
        params={"alpha_plus": alpha_plus, "alpha_minus": alpha_minus, "r_kind": r_kind,
                "c": c, "amp": amp, "s": s},
    )


def from_samples(mu, w, p, q, M: float | None = None, name: str = "custom_sampled") -> CoefficientSet:
    """Piecewise-linear interpolants of sampled ``(mu, w, p, q)`` columns."""
    mu = np.asarray(mu, dtype=float)
    order = np.argsort(mu)
    mu = mu[order]
    if np.any(np.diff(mu) <= 0):
        raise ValueError("sample abscissae must be distinct")
    cols = [np.asarray(v, dtype=float)[order] for v in (w, p, q)]

    def interp(vals):
        return lambda x: np.interp(np.asarray(x, dtype=float), mu, vals)

    M = float(min(-mu[0], mu[-1])) if M is None else float(M)
    return CoefficientSet(name=name, w=interp(cols[0]), p=interp(cols[1]), q=interp(cols[2]), M=M,
                          params={"samples": int(mu.size)})


PRESETS = {
    "signum_power": signum_power,
    "fokker_planck": fokker_planck,
    "power_with_r": power_with_r,
}


# ---------------------------------------------------------------------------
# admissibility checks


def scan_grid(c: CoefficientSet, n: int = 2000) -> Grid:
    return build_grid(c.M, n)


def detect_turning_points(c: CoefficientSet, grid: Grid, max_count: int = 8, xtol: float = 1e-13) -> list[float]:
    """Sign changes of ``w`` between adjacent grid nodes, refined by bisection.

    Bisection stops once the bracket is below ``xtol * M``.
    """
    mu = np.asarray(grid.nodes)
    w = np.asarray(c.w(mu), dtype=float)
    nz = np.nonzero(w)[0]
    if nz.size == 0:
        raise NoSignChange("w vanishes at every node")
    s = np.sign(w[nz])
    flips = np.nonzero(s[1:] != s[:-1])[0]
    if flips.size == 0:
        raise NoSignChange("w has constant sign on the grid")
    if flips.size > max_count:
        raise AmbiguousSign(f"w changes sign {flips.size} times (max {max_count})")
    points = []
    for k in flips:
        a, b = mu[nz[k]], mu[nz[k + 1]]
        sa = s[k]
        while b - a > xtol * c.M:
            mid = 0.5 * (a + b)
            sm = np.sign(float(c.w(np.array(mid))))
            if sm == 0:
                a = b = mid
                break
            if sm == sa:
                a = mid
            else:
                b = mid
        points.append(0.5 * (a + b))
    return points


@dataclass(frozen=True)
class SimplicityCertificate:
    mu0: float
    beta_left: float
    beta_right: float
    rho_left: float
    rho_right: float
    residual_left: float
    residual_right: float
    passed: bool

    @property
    def beta(self) -> tuple[float, float]:
        return self.beta_left, self.beta_right


def _one_sided_fit(c, mu0, side, delta0, levels, points, tol):
    betas, resid, logrho = [], [], []
    for k in range(levels):
        d = delta0 * 2.0 ** (-k)
        t = d * 2.0 ** (-np.arange(points) / 4.0)
        w = np.asarray(c.w(mu0 + side * t), dtype=float)
        sgn = np.sign(w)
        if np.any(sgn == 0) or np.any(sgn != sgn[0]) or not np.all(np.isfinite(w)):
            raise FitFailure(f"w is not sign-definite next to mu0 = {mu0} (side {side:+d})")
        X = np.column_stack([np.ones_like(t), np.log(t)])
        coef, *_ = np.linalg.lstsq(X, np.log(np.abs(w)), rcond=None)
        r = np.log(np.abs(w)) - X @ coef
        betas.append(coef[1])
        logrho.append(coef[0])
        resid.append(float(np.sqrt(np.mean(r * r))))
    slope_drift = abs(betas[-1] - betas[-2])
    if resid[-1] > tol or slope_drift > tol:
        raise FitFailure(
            f"power-law fit at mu0 = {mu0} (side {side:+d}) did not settle: "
            f"slope drift {slope_drift:.3g}, residual {resid[-1]:.3g}"
        )
    return betas[-1], math.exp(logrho[-1]), resid[-1]


def check_simplicity(c: CoefficientSet, mu0: float, delta0: float | None = None, levels: int = 12,
                     points: int = 17, tol: float = 1e-2) -> SimplicityCertificate:
    """Certify ``|w(mu)| ~ rho |mu - mu0|**beta`` from both sides of ``mu0``.

    The log-log slope is fitted on geometrically shrinking one-sided windows;
    the fit must settle (successive slopes within ``tol``) with an RMS residual
    below ``tol``.  ``passed`` additionally requires ``beta > -1`` on both sides.
    """
    if delta0 is None:
        delta0 = min(0.5, 0.5 * (c.M - abs(mu0)))
    right = _one_sided_fit(c, mu0, +1, delta0, levels, points, tol)
    left = _one_sided_fit(c, mu0, -1, delta0, levels, points, tol)
    passed = left[0] > -1 and right[0] > -1 and left[1] > 0 and right[1] > 0
    return SimplicityCertificate(mu0, left[0], right[0], left[1], right[1], left[2], right[2], bool(passed))


@dataclass(frozen=True)
class KosResult:
    alpha: tuple[float, float]
    c: tuple[float, float]
    integrals: tuple[float, float]
    tails: tuple[float, float]
    passed: bool

    @property
    def totals(self) -> tuple[float, float]:
        return tuple(i + t for i, t in zip(self.integrals, self.tails))


def _estimate_power_tail(c: CoefficientSet, side: int):
    M = c.M
    a, b = 0.5 * M, M
    wa, wb = (abs(float(c.w(np.array(side * x)))) for x in (a, b))
    alpha = math.log(wb / wa) / math.log(b / a)
    cc = wb / b ** alpha

    def r(mu):
        mu = np.asarray(mu, dtype=float)
        return np.abs(c.w(mu)) * np.abs(mu) ** (-alpha)

    return alpha, cc, r


def _tail_integral(dev, alpha, M, negligible):
    """Extrapolate ``int_M^inf mu**(alpha/2) dev(mu) dmu`` from a power-law fit."""
    t = M * 2.0 ** (-np.arange(9) / 4.0)
    d = np.abs(dev(t))
    if np.all(d <= negligible):
        return 0.0
    if np.any(d <= 0):
        d = np.maximum(d, np.finfo(float).tiny)
    slope, logamp = np.polyfit(np.log(t), np.log(d), 1)
    e = alpha / 2 + slope
    if e >= -1:
        raise TailDivergence(
            f"|r - c| decays like mu^{slope:.3f}; integrand exponent {e:.3f} >= -1"
        )
    return float(math.exp(logamp) * M ** (e + 1) / (-(e + 1)))


def check_kos_conditions(c: CoefficientSet, cap: float = 1e8, q_samples: int = 2001) -> KosResult:
    """Tail integrals ``int_1^inf |mu|**(alpha/2)|r - c| dmu`` on both sides.

    Quadrature covers ``[1, M]``; the remainder is extrapolated from the fitted
    decay of ``|r - c|`` near ``M`` and reported separately.
    """
    mu = np.linspace(-c.M, c.M, q_samples)
    if np.any(np.asarray(c.q(mu)) != 0):
        raise NonzeroPotential("the tail criterion applies only for q = 0")
    if c.M <= 1:
        raise ValueError("need M > 1 for the tail integrals")
    d = c.descriptor
    sides = {}
    for side in (+1, -1):
        if d is not None:
            alpha = d.alpha_plus if side > 0 else d.alpha_minus
            cc = d.r_limit[1] if side > 0 else d.r_limit[0]
            r = d.r
        else:
            alpha, cc, r = _estimate_power_tail(c, side)

        def dev(x, r=r, cc=cc, side=side):
            return np.abs(np.asarray(r(side * np.asarray(x, dtype=float)), dtype=float) - cc)

        def integrand(x, dev=dev, alpha=alpha):
            return x ** (alpha / 2) * float(dev(np.array(x)))

        body, _ = integrate.quad(integrand, 1.0, c.M, limit=400)
        tail = _tail_integral(dev, alpha, c.M, negligible=1e-14 * max(abs(cc), 1.0))
        sides[side] = (alpha, cc, body, tail)
    a_m, c_m, i_m, t_m = sides[-1]
    a_p, c_p, i_p, t_p = sides[+1]
    passed = (
        a_p > -1 and a_m > -1 and c_p > 0 and c_m > 0
        and i_p + t_p < cap and i_m + t_m < cap
    )
    return KosResult((a_m, a_p), (c_m, c_p), (i_m, i_p), (t_m, t_p), bool(passed))


@dataclass(frozen=True)
class PositivityResult:
    value: float
    passed: bool


def check_uniform_positivity(c: CoefficientSet, grid: Grid, threshold: float = 1e-12) -> PositivityResult:
    """Grid minimum of ``q/|w|``.  Reported as-is; no limit is taken."""
    mu = np.asarray(grid.nodes)
    ratio = np.asarray(c.q(mu), dtype=float) / np.abs(np.asarray(c.w(mu), dtype=float))
    value = float(np.min(ratio))
    return PositivityResult(value, bool(value > threshold))


@dataclass
class AdmissibilityReport:
    turning_points: list
    simplicity: list
    kos: dict | None
    uniform_positivity: float
    errors: dict

    def to_dict(self) -> dict:
        return {
            "turning_points": [float(t) for t in self.turning_points],
            "simplicity": self.simplicity,
            "kos": self.kos,
            "uniform_positivity": self.uniform_positivity,
            "errors": self.errors,
        }

    @property
    def passed(self) -> bool:
        simple = bool(self.simplicity) and all(s["passed"] for s in self.simplicity)
        kos_ok = self.kos is not None and self.kos["passed"]
        return simple and (kos_ok or self.uniform_positivity > 0) and not self.errors.get("turning_points")


def check_admissibility(c: CoefficientSet, grid: Grid | None = None) -> AdmissibilityReport:
    """Run every check, recording failures instead of raising."""
    grid = scan_grid(c) if grid is None else grid
    errors = {}
    try:
        tps = detect_turning_points(c, grid)
    except (NoSignChange, AmbiguousSign) as exc:
        tps = []
        errors["turning_points"] = f"{type(exc).__name__}: {exc}"
    simplicity = []
    for t in tps:
        try:
            cert = check_simplicity(c, t)
            simplicity.append({"mu0": cert.mu0, "beta_left": cert.beta_left, "beta_right": cert.beta_right,
                               "rho_left": cert.rho_left, "rho_right": cert.rho_right,
                               "residual": max(cert.residual_left, cert.residual_right),
                               "passed": cert.passed})
        except FitFailure as exc:
            simplicity.append({"mu0": t, "passed": False, "error": str(exc)})
    kos = None
    if len(tps) == 1:
        try:
            k = check_kos_conditions(c)
            kos = {"alpha": list(k.alpha), "c": list(k.c), "integrals": list(k.integrals),
                   "tails": list(k.tails), "passed": k.passed}
        except (NonzeroPotential, TailDivergence) as exc:
            kos = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
    pos = check_uniform_positivity(c, grid)
    return AdmissibilityReport(tps, simplicity, kos, pos.value, errors)
