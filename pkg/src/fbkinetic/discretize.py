"""Finite-dimensional weighted Hilbert space and the operator pair (L, J).

The discrete space carries the inner product ``(x, y)_W = sum(y_i * x_i * W_i)``
with ``W_i = |w(mu_i)| h_i``; ``L`` is the conservative three-point scheme for
``y -> (-(p y')' + q y) / |w|`` with Dirichlet data outside ``[-M, M]`` and
``J = diag(sgn w(mu_i))``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as la

from .errors import BadGrading, GridError, SingularWeight

WEIGHT_FLOOR = 1e-300


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Cell-centred grid on ``[-M, M]``; ``nodes`` are cell midpoints."""

    edges: np.ndarray
    M: float
    turning_points: tuple = ()

    def __post_init__(self):
        edges = _frozen(self.edges)
        if edges.ndim != 1 or edges.size < 2:
            raise GridError("need at least one cell")
        if np.any(np.diff(edges) <= 0):
            raise GridError("cell edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "turning_points", tuple(float(t) for t in self.turning_points))

    @cached_property
    def nodes(self) -> np.ndarray:
        return _frozen(0.5 * (self.edges[1:] + self.edges[:-1]))

    @cached_property
    def masses(self) -> np.ndarray:
        return _frozen(np.diff(self.edges))

    @property
    def n(self) -> int:
        return self.edges.size - 1


def _segment_counts(lengths, n, symmetric):
    lengths = np.asarray(lengths, dtype=float)
    k = lengths.size
    if n < k:
        raise GridError(f"{n} cells cannot cover {k} segments")
    if symmetric:
        if n % 2:
            raise GridError("symmetric layout with odd n puts a node at the centre")
        half = (k + 1) // 2
        if k % 2 and half == 1:
            return np.array([n])
        counts_half = _segment_counts(lengths[:half] if k % 2 == 0 else
                                      np.r_[lengths[:half - 1], 0.5 * lengths[half - 1]],
                                      n // 2, False)
        if k % 2 == 0:
            return np.r_[counts_half, counts_half[::-1]]
        mid = 2 * counts_half[-1]
        return np.r_[counts_half[:-1], mid, counts_half[:-1][::-1]]
    ideal = lengths / lengths.sum() * n
    counts = np.maximum(np.floor(ideal).astype(int), 1)
    while counts.sum() > n:
        counts[np.argmax(counts - ideal)] -= 1
    while counts.sum() < n:
        counts[np.argmax(ideal - counts)] += 1
    return counts


def _cluster(m, grading, left, right):
    s = np.linspace(0.0, 1.0, m + 1)
    if grading == 1.0 or not (left or right):
        return s
    if left and right:
        out = np.where(s <= 0.5, 0.5 * (2 * s) ** grading, 1 - 0.5 * (2 - 2 * s) ** grading)
    elif left:
        out = s ** grading
    else:
        out = 1 - (1 - s) ** grading
    out[0], out[-1] = 0.0, 1.0
    return out


def build_grid(M: float, n: int, grading: float = 1.0, turning_points=(), symmetric: bool = False) -> Grid:
    """Build a graded cell-centred grid on ``[-M, M]``.

    Turning points inside ``(-M, M)`` become cell edges, so no node ever sits on
    one. Within each segment the edges follow ``s -> s**grading`` towards the
    adjacent turning points (``grading == 1`` is uniform).
    """
    if M <= 0:
        raise GridError("half-width M must be positive")
    if n < 4:
        raise GridError("need n >= 4 nodes")
    if grading <= 0:
        raise BadGrading(f"grading must be positive, got {grading}")
    tps = sorted(float(t) for t in turning_points if -M < t < M)
    if symmetric and not np.allclose(tps, [-t for t in reversed(tps)], atol=1e-14 * M):
        raise GridError("turning points are not symmetric under mu -> -mu")
    breaks = np.array([-M, *tps, M], dtype=float)
    counts = _segment_counts(np.diff(breaks), n, symmetric)
    pieces = []
    for j, m in enumerate(counts):
        a, b = breaks[j], breaks[j + 1]
        s = _cluster(int(m), float(grading), left=j > 0, right=j < len(counts) - 1)
        e = a + (b - a) * s
        pieces.append(e if j == 0 else e[1:])
    edges = np.concatenate(pieces)
    if symmetric:
        edges = 0.5 * (edges - edges[::-1])
    return Grid(edges=edges, M=float(M), turning_points=tuple(tps))


@dataclass(frozen=True)
class DiscreteModel:
    """Operator pair ``(L, J)`` on the weighted space ``(R^n, (.,.)_W)``."""

    L_mat: np.ndarray
    J_diag: np.ndarray
    weight_masses: np.ndarray
    grid: Grid | None = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        L = _frozen(self.L_mat)
        J = _frozen(self.J_diag)
        W = _frozen(self.weight_masses)
        n = J.size
        if L.shape != (n, n) or W.shape != (n,):
            raise ValueError(f"inconsistent shapes: L {L.shape}, J {J.shape}, W {W.shape}")
        if not np.all(np.abs(J) == 1.0):
            raise ValueError("J_diag entries must be +1 or -1")
        if np.any(W <= 0):
            raise ValueError("weight masses must be positive")
        object.__setattr__(self, "L_mat", L)
        object.__setattr__(self, "J_diag", J)
        object.__setattr__(self, "weight_masses", W)

    @classmethod
    def from_matrices(cls, L, J, W=None, label: str = "") -> "DiscreteModel":
        L = np.atleast_2d(np.asarray(L, dtype=float))
        W = np.ones(L.shape[0]) if W is None else W
        return cls(L_mat=L, J_diag=np.asarray(J, dtype=float).ravel(), weight_masses=W, label=label)

    @property
    def n(self) -> int:
        return self.J_diag.size

    @cached_property
    def B_mat(self) -> np.ndarray:
        return _frozen(self.J_diag[:, None] * self.L_mat)

    @property
    def plus_mask(self) -> np.ndarray:
        return self.J_diag > 0

    @property
    def minus_mask(self) -> np.ndarray:
        return self.J_diag < 0

    @cached_property
    def form_matrix(self) -> np.ndarray:
        """``W L``; symmetric whenever ``L`` is W-self-adjoint."""
        return _frozen(self.weight_masses[:, None] * self.L_mat)

    def symmetry_defect(self) -> float:
        F = self.form_matrix
        return float(np.max(np.abs(F - F.T)) / max(np.max(np.abs(F)), np.finfo(float).tiny))

    @cached_property
    def w_eigenvalues(self) -> np.ndarray:
        """Spectrum of ``L`` in the W-inner product, ascending."""
        F = self.form_matrix
        return _frozen(la.eigh(0.5 * (F + F.T), np.diag(self.weight_masses), eigvals_only=True))

    @property
    def delta(self) -> float:
        return float(self.w_eigenvalues[0])

    def inner(self, x, y):
        """``(x, y)_W`` along the last axis."""
        return np.sum(np.asarray(x) * np.conj(y) * self.weight_masses, axis=-1)

    def norm(self, x):
        return np.sqrt(np.real(self.inner(x, x)))

    def krein(self, x, y):
        """Indefinite form ``[x, y] = (J x, y)_W``."""
        return self.inner(self.J_diag * np.asarray(x), y)

    @cached_property
    def key(self) -> str:
        h = hashlib.sha256()
        for a in (self.L_mat, self.J_diag, self.weight_masses):
            h.update(str(a.shape).encode())
            h.update(np.ascontiguousarray(a, dtype=float).tobytes())
        return h.hexdigest()


def stiffness_matrix(nodes, edges, p_nodes):
    """Symmetric flux matrix for ``-(p y')'`` with zero Dirichlet ghosts.

    Interior faces use the distance-weighted harmonic mean of ``p``; the
    boundary ghost node mirrors the first/last node across the outer face.
    """
    n = nodes.size
    inner = 1.0 / ((edges[1:-1] - nodes[:-1]) / p_nodes[:-1] + (nodes[1:] - edges[1:-1]) / p_nodes[1:])
    h = np.diff(edges)
    left = p_nodes[0] / h[0]
    right = p_nodes[-1] / h[-1]
    diag = np.zeros(n)
    diag[:-1] += inner
    diag[1:] += inner
    diag[0] += left
    diag[-1] += right
    return np.diag(diag) - np.diag(inner, 1) - np.diag(inner, -1)


def assemble_operators(c, g: Grid) -> DiscreteModel:
    """Discretise ``y -> (-(p y')' + q y)/|w|`` on ``g`` (Dirichlet at the ends)."""
    mu = g.nodes
    w = np.asarray(c.w(mu), dtype=float)
    p = np.asarray(c.p(mu), dtype=float)
    q = np.asarray(c.q(mu), dtype=float)
    if np.any(~np.isfinite(w)) or np.any(np.abs(w) < WEIGHT_FLOOR):
        bad = mu[~np.isfinite(w) | (np.abs(w) < WEIGHT_FLOOR)]
        raise SingularWeight(f"|w| below floor or non-finite at mu = {bad[:5]}")
    if np.any(p <= 0):
        raise ValueError("diffusion coefficient p must be positive on the grid")
    K = stiffness_matrix(mu, g.edges, p)
    h = g.masses
    W = np.abs(w) * h
    L = (K + np.diag(q * h)) / W[:, None]
    return DiscreteModel(L_mat=L, J_diag=np.sign(w), weight_masses=W, grid=g,
                         label=getattr(c, "name", ""))


def random_jpositive_instance(n: int, seed, gap: float = 0.1, spread: float = 4.0) -> DiscreteModel:
    """Random ``W = I`` model with ``L = Q^T D Q``, ``D >= gap``, mixed signature."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    D = gap + rng.uniform(0.0, spread, n)
    L = Q.T @ (D[:, None] * Q)
    L = 0.5 * (L + L.T)
    J = rng.choice([-1.0, 1.0], size=n)
    if n >= 2 and abs(J.sum()) == n:
        J[rng.integers(n)] *= -1
    return DiscreteModel.from_matrices(L, J, label=f"random(n={n}, seed={seed})")
