"""CSV/JSON artifacts, boundary-profile builders and the decomposition cache."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import krein
from .discretize import DiscreteModel
from .duhamel import ForcingFunction
from .errors import ConfigError


def _fmt(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def solution_csv_text(x, values, nodes, weight_masses) -> str:
    lines = ["# weight_masses," + _fmt(weight_masses), "x," + _fmt(nodes)]
    for xi, row in zip(np.atleast_1d(x), np.atleast_2d(values)):
        lines.append(repr(float(xi)) + "," + _fmt(row))
    return "\n".join(lines) + "\n"


def write_solution_csv(path, x, values, nodes, weight_masses) -> None:
    """Rows ``x, psi(x, mu_1), ...``; the header holds the nodes, a comment holds the masses."""
    _atomic_write(path, solution_csv_text(x, values, nodes, weight_masses))


def read_solution_csv(path):
    """Returns ``(x, values, nodes, weight_masses)``."""
    with open(path) as fh:
        first = fh.readline().strip()
        header = fh.readline().strip()
    if not first.startswith("# weight_masses,"):
        raise ValueError(f"{path}: missing weight_masses comment line")
    masses = np.array([float(v) for v in first.split(",")[1:]])
    nodes = np.array([float(v) for v in header.split(",")[1:]])
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return data[:, 0], data[:, 1:], nodes, masses


def write_json(path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


# forcing ----------------------------------------------------------------


def write_forcing_csv(path, f: ForcingFunction, model: DiscreteModel) -> None:
    lines = [f"# grid_hash={model.key}", "x," + ",".join(f"f{i}" for i in range(model.n))]
    for xi, row in zip(f.xs, f.values):
        lines.append(repr(float(xi)) + "," + _fmt(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_forcing_csv(path, model: DiscreteModel, tail: str = "zero", rate: float | None = None) -> ForcingFunction:
    """Forcing rows ``x, f_1 .. f_n``; the ``grid_hash`` comment must match ``model.key``."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"forcing CSV not found: {path}")
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("# grid_hash="):
        raise ConfigError(f"{path}: first line must be '# grid_hash=<model key>'")
    if first.split("=", 1)[1] != model.key:
        raise ConfigError(f"{path}: forcing was sampled on a different grid")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    if data.shape[1] != model.n + 1:
        raise ConfigError(f"{path}: expected {model.n + 1} columns, found {data.shape[1]}")
    return ForcingFunction(data[:, 0], data[:, 1:], tail=tail, rate=rate)


# boundary profiles -------------------------------------------------------


def boundary_profile(spec: dict, nodes, k=None, model=None) -> np.ndarray:
    """Full vector for a named profile; the caller masks it to one half-range.

    ``indicator``: 1 on ``[lo, hi]``; ``gaussian_bump``: ``amp exp(-((mu-center)/width)^2)``;
    ``eigenmode``: eigenvector ``index`` of ``B`` (ordered by eigenvalue);
    ``csv``: one value per node; ``zero``.
    """
    nodes = np.asarray(nodes, dtype=float)
    kind = spec.get("profile", "zero")
    if kind == "zero":
        return np.zeros_like(nodes)
    if kind == "indicator":
        lo, hi = float(spec.get("lo", -np.inf)), float(spec.get("hi", np.inf))
        return float(spec.get("amp", 1.0)) * ((nodes >= lo) & (nodes <= hi)).astype(float)
    if kind == "gaussian_bump":
        width = float(spec.get("width", 1.0))
        if width <= 0:
            raise ConfigError("gaussian_bump width must be positive")
        return float(spec.get("amp", 1.0)) * np.exp(-((nodes - float(spec.get("center", 0.0))) / width) ** 2)
    if kind == "eigenmode":
        if k is None:
            raise ConfigError("eigenmode profile needs the decomposition")
        idx = int(spec["index"])
        if not -k.n <= idx < k.n:
            raise ConfigError(f"eigenmode index {idx} out of range for n = {k.n}")
        return np.array(k.eigenvectors[:, np.argsort(k.eigenvalues)[idx]])
    if kind == "csv":
        p = Path(spec["path"])
        if not p.exists():
            raise ConfigError(f"boundary CSV not found: {p}")
        vals = np.loadtxt(p, delimiter=",", comments="#", ndmin=1).ravel()
        if vals.size != nodes.size:
            raise ConfigError(f"{p}: {vals.size} values for {nodes.size} grid nodes")
        return vals
    raise ConfigError(f"unknown boundary profile {kind!r}")


# decomposition cache -----------------------------------------------------


def cache_path(cache_dir, model: DiscreteModel) -> Path:
    return Path(cache_dir) / f"decomp-{model.key}.npz"


def save_decomposition(cache_dir, k: krein.KreinDecomposition) -> Path:
    path = cache_path(cache_dir, k.model)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".npz")
    os.close(fd)
    np.savez(tmp, key=np.array(k.model.key), eigenvalues=k.eigenvalues, eigenvectors=k.eigenvectors)
    os.replace(tmp, path)
    return path


def load_decomposition(cache_dir, model: DiscreteModel) -> krein.KreinDecomposition | None:
    path = cache_path(cache_dir, model)
    if not path.exists():
        return None
    with np.load(path) as d:
        if str(d["key"]) != model.key or d["eigenvectors"].shape != (model.n, model.n):
            return None
        return krein.from_cache(model, d["eigenvalues"], d["eigenvectors"])


def decompose_cached(model: DiscreteModel, cache_dir=None):
    """``(decomposition, hit)``; writes the cache on a miss when a directory is given."""
    if cache_dir is not None:
        k = load_decomposition(cache_dir, model)
        if k is not None:
            return k, True
    k = krein.decompose(model)
    if cache_dir is not None:
        save_decomposition(cache_dir, k)
    return k, False
