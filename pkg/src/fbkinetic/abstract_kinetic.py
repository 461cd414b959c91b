"""Kinetic form ``T psi' = -A psi + f`` and its reduction to ``psi' = -J L psi + T^{-1} f``.

``T`` is diagonal (its spectral representation) with nonzero entries; the
energy space ``H_T`` carries ``||h||_T = || |T|^{1/2} h ||`` and its dual
``H_T'`` carries ``|| |T|^{-1/2} g ||``.  Reduction takes ``J = sgn T``,
``W = |T|`` and ``L = |T|^{-1} A``, so that ``W L = A`` and
``<L h, g>_T = <A h, g>``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import duhamel, halfrange
from .discretize import DiscreteModel
from .errors import NotPositive, NotSymmetric, ZeroTEntry
from .halfrange import BoundaryData
from .krein import decompose


@dataclass(frozen=True)
class TModel:
    T_diag: np.ndarray
    A_mat: np.ndarray
    label: str = ""

    def __post_init__(self):
        T = np.asarray(self.T_diag, dtype=float).ravel()
        A = np.atleast_2d(np.asarray(self.A_mat, dtype=float))
        if A.shape != (T.size, T.size):
            raise ValueError(f"A has shape {A.shape}, expected {(T.size, T.size)}")
        if np.any(T == 0) or not np.all(np.isfinite(T)):
            raise ZeroTEntry("T must be injective: every diagonal entry nonzero and finite")
        T.setflags(write=False)
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "T_diag", T)
        object.__setattr__(self, "A_mat", A)

    @property
    def n(self) -> int:
        return self.T_diag.size

    @property
    def abs_T(self) -> np.ndarray:
        return np.abs(self.T_diag)

    @property
    def Q_plus(self) -> np.ndarray:
        return np.diag((self.T_diag > 0).astype(float))

    @property
    def Q_minus(self) -> np.ndarray:
        return np.diag((self.T_diag < 0).astype(float))

    def norm_T(self, h):
        return np.linalg.norm(np.sqrt(self.abs_T) * np.asarray(h), axis=-1)

    def norm_T_dual(self, g):
        return np.linalg.norm(np.asarray(g) / np.sqrt(self.abs_T), axis=-1)

    @classmethod
    def from_json(cls, path) -> "TModel":
        d = json.loads(Path(path).read_text())
        return cls(np.asarray(d["T"], dtype=float), np.asarray(d["A"], dtype=float), d.get("label", ""))

    @classmethod
    def from_csv(cls, path) -> "TModel":
        """First column is the diagonal of ``T``, the remaining columns are ``A``."""
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return cls(data[:, 0], data[:, 1:])

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps({"T": self.T_diag.tolist(), "A": self.A_mat.tolist(),
                                          "label": self.label}, indent=2))


@dataclass(frozen=True)
class Spaces:
    weight: np.ndarray
    Q_plus: np.ndarray
    Q_minus: np.ndarray
    duality_defect: float

    def norm(self, h):
        return np.linalg.norm(np.sqrt(self.weight) * np.asarray(h), axis=-1)

    def dual_norm(self, g):
        return np.linalg.norm(np.asarray(g) / np.sqrt(self.weight), axis=-1)


def build_spaces(t: TModel, samples: int = 100, seed=0) -> Spaces:
    """Norms of ``H_T`` and ``H_T'``; checks ``|<h, g>| <= ||h||_T ||g||_T'`` on random pairs.

    ``duality_defect`` is the largest ``|<h,g>| / (||h||_T ||g||_T') - 1`` seen,
    including the equality case ``g = |T| h``; it must not be positive beyond
    rounding.
    """
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((samples, t.n))
    G = rng.standard_normal((samples, t.n))
    G[0] = t.abs_T * H[0]
    ratio = np.abs(np.einsum("ij,ij->i", H, G)) / (t.norm_T(H) * t.norm_T_dual(G))
    return Spaces(t.abs_T, t.Q_plus, t.Q_minus, float(np.max(ratio) - 1.0))


@dataclass(frozen=True)
class Reduction:
    model: DiscreteModel
    pairing_defect: float
    min_energy: float
    symmetry_defect: float


def pairing_identity_defect(t: TModel, m: DiscreteModel, samples: int = 100, seed=0) -> float:
    """Worst ``|<L h, g>_T - <A h, g>| / (||A|| ||h|| ||g||)`` over random pairs."""
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((samples, t.n))
    G = rng.standard_normal((samples, t.n))
    lhs = np.einsum("ij,ij->i", (H @ m.L_mat.T) * t.abs_T, G)
    rhs = np.einsum("ij,ij->i", H @ t.A_mat.T, G)
    scale = np.linalg.norm(t.A_mat, 2) * np.linalg.norm(H, axis=1) * np.linalg.norm(G, axis=1)
    return float(np.max(np.abs(lhs - rhs) / scale))


def reduce(t: TModel, sym_tol: float = 1e-12, samples: int = 100, seed=0) -> Reduction:
    A = t.A_mat
    scale = max(np.max(np.abs(A)), np.finfo(float).tiny)
    sym = float(np.max(np.abs(A - A.T)) / scale)
    if sym > sym_tol:
        raise NotSymmetric(f"A is not symmetric (defect {sym:.3e}); L would not be W-self-adjoint")
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    if ev[0] <= 0:
        raise NotPositive(f"A is not positive definite (smallest eigenvalue {ev[0]:.3e})")
    W = t.abs_T
    L = A / W[:, None]
    m = DiscreteModel(L, np.sign(t.T_diag), W, label=t.label or "kinetic")
    return Reduction(m, pairing_identity_defect(t, m, samples, seed), float(ev[0]), m.symmetry_defect())


def boundary_from_kinetic(t: TModel, phi, tau, phi_right=None) -> BoundaryData:
    """``Q+ psi(0) = Q+ phi`` and ``Q- psi(tau) = Q- phi_right`` as half-range data."""
    phi = np.asarray(phi, dtype=float)
    right = phi if phi_right is None else np.asarray(phi_right, dtype=float)
    plus = np.where(t.T_diag > 0, phi, 0.0)
    if math.isinf(float(tau)):
        return BoundaryData(plus, None, tau)
    return BoundaryData(plus, np.where(t.T_diag < 0, right, 0.0), tau)


def forcing_to_reduced(t: TModel, f: duhamel.ForcingFunction) -> duhamel.ForcingFunction:
    return duhamel.ForcingFunction(f.xs, f.values / t.T_diag, f.tail, f.rate, f.holder)


def solve_kinetic(t: TModel, bd: BoundaryData, f: duhamel.ForcingFunction | None = None,
                  neumann: bool = False, red: Reduction | None = None):
    """Solve on the reduced model; norms of the result are ``H_T`` norms (``W = |T|``)."""
    red = reduce(t) if red is None else red
    k = decompose(red.model)
    if f is None or f.is_zero():
        return halfrange.solve(k, bd, neumann=neumann)
    return duhamel.solve_nonhomogeneous(k, bd, forcing_to_reduced(t, f), neumann=neumann)
