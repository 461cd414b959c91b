"""Batch front end: ``fbkinetic [--solve|--check|--compare] [--strict] [--cache-dir DIR] CONFIG``.

The config is a YAML file with the sections ``problem``, ``discretization``,
``slab``, ``boundary``, ``forcing``, ``output``, ``tolerances``, ``oracle`` and
``cache``.  Everything is parsed and validated before any artifact is
written.  Exit codes: 0 ok, 2 config error, 3 admissibility failure,
4 solver or residual-check failure, 5 oracle mismatch.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import abstract_kinetic, duhamel, halfrange, io, oracle, problem_def
from .discretize import DiscreteModel, assemble_operators, build_grid
from .errors import ConfigError, FBKineticError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_SOLVER = 4
EXIT_ORACLE = 5

SECTIONS = {"problem", "discretization", "slab", "boundary", "forcing", "output", "tolerances",
            "oracle", "cache", "seed"}
DEFAULT_TOL = {"boundary_residual": 1e-8, "oracle_delta": 2e-2}


@dataclass
class RunConfig:
    path: Path
    raw: dict
    coeffs: problem_def.CoefficientSet | None
    model: DiscreteModel
    nodes: np.ndarray
    tau: float
    boundary: dict
    forcing: dict
    x_out: np.ndarray
    solution_csv: Path | None
    report_json: Path | None
    tolerances: dict
    oracle: dict
    cache_dir: Path | None
    timings: bool = False
    tmodel: abstract_kinetic.TModel | None = None
    extra: dict = field(default_factory=dict)


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def _section(raw, name, default=None):
    v = raw.get(name, default if default is not None else {})
    if not isinstance(v, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return v


def _build_problem(raw, base):
    prob = _section(raw, "problem")
    disc = _section(raw, "discretization")
    preset = prob.get("preset")
    params = dict(prob.get("params") or {})
    if preset in ("matrix", "kinetic"):
        src = prob.get("json") or prob.get("csv")
        if src is None:
            raise ConfigError(f"preset '{preset}' needs a 'json' (or 'csv' for kinetic) path")
        src = _resolve(base, src)
        if not src.exists():
            raise ConfigError(f"model file not found: {src}")
        try:
            if preset == "kinetic":
                t = (abstract_kinetic.TModel.from_csv(src) if src.suffix == ".csv"
                     else abstract_kinetic.TModel.from_json(src))
                red = abstract_kinetic.reduce(t)
                model = red.model
                extra = {"pairing_defect": red.pairing_defect, "min_energy": red.min_energy,
                         "symmetry_defect": red.symmetry_defect}
                return None, model, np.arange(model.n, dtype=float), t, extra
            d = json.loads(src.read_text())
            model = DiscreteModel.from_matrices(np.array(d["L"], dtype=float), np.array(d["J"], dtype=float),
                                                None if d.get("W") is None else np.array(d["W"], dtype=float),
                                                label=d.get("label", "matrix"))
        except (KeyError, ValueError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read model from {src}: {e}") from e
        return None, model, np.arange(model.n, dtype=float), None, {}
    if "M" in disc:
        params.setdefault("M", float(disc["M"]))
    if preset == "custom_sampled":
        if "csv" not in prob:
            raise ConfigError("custom_sampled needs problem.csv with columns mu,w,p,q")
        src = _resolve(base, prob["csv"])
        if not src.exists():
            raise ConfigError(f"coefficient CSV not found: {src}")
        data = np.loadtxt(src, delimiter=",", comments="#", ndmin=2)
        if data.shape[1] != 4:
            raise ConfigError(f"{src}: expected 4 columns mu,w,p,q")
        c = problem_def.from_samples(data[:, 0], data[:, 1], data[:, 2], data[:, 3], M=params.get("M"))
    elif preset in problem_def.PRESETS:
        try:
            c = problem_def.PRESETS[preset](**params)
        except TypeError as e:
            raise ConfigError(f"bad parameters for preset '{preset}': {e}") from e
    else:
        raise ConfigError(f"unknown preset {preset!r}")
    n = int(disc.get("n", 128))
    grading = float(disc.get("grading", 1.0))
    try:
        tps = problem_def.detect_turning_points(c, problem_def.scan_grid(c))
    except FBKineticError:
        tps = []
    symmetric = bool(disc.get("symmetric", c.symmetric))
    if symmetric and tps:
        # bisection leaves roundoff-level asymmetry; average t with -t
        t = np.asarray(tps)
        tps = list(0.5 * (t - t[::-1]))
    grid = build_grid(c.M, n, grading=grading, turning_points=tps, symmetric=symmetric)
    model = assemble_operators(c, grid)
    return c, model, grid.nodes, None, {"turning_points": [float(t) for t in tps]}


def _x_samples(spec, tau):
    if spec is None:
        stop = tau if math.isfinite(tau) else 10.0
        x = np.linspace(0.0, stop, 101)
    elif isinstance(spec, dict):
        x = np.linspace(float(spec.get("start", 0.0)), float(spec["stop"]), int(spec.get("num", 101)))
    else:
        x = np.asarray(spec, dtype=float).ravel()
    ends = [0.0] if math.isinf(tau) else [0.0, tau]
    x = np.unique(np.r_[x, ends])
    if np.any(x < 0) or (math.isfinite(tau) and np.any(x > tau)):
        raise ConfigError("output x samples must lie in the slab")
    return x


def load_config(path, cache_dir=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    base = path.parent
    try:
        coeffs, model, nodes, tmodel, extra = _build_problem(raw, base)
    except (ValueError, FBKineticError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"problem setup failed: {e}") from e

    slab = _section(raw, "slab")
    has_tau = "tau" in slab
    half = bool(slab.get("halfspace", False))
    if has_tau == half:
        raise ConfigError("slab needs exactly one of 'tau' or 'halfspace: true'")
    tau = math.inf if half else float(slab["tau"])
    if not tau > 0:
        raise ConfigError("tau must be positive")

    bnd = _section(raw, "boundary")
    if half and bnd.get("minus", {}).get("profile", "zero") != "zero":
        raise ConfigError("half-space problems take no minus boundary data")
    forcing = _section(raw, "forcing", {"kind": "none"})
    if forcing.get("kind", "none") not in ("none", "constant", "csv"):
        raise ConfigError(f"unknown forcing kind {forcing.get('kind')!r}")
    if forcing.get("kind") == "csv":
        fp = _resolve(base, forcing.get("path", ""))
        if not fp.exists():
            raise ConfigError(f"forcing CSV not found: {fp}")
        forcing = {**forcing, "path": fp}
    for side in ("plus", "minus"):
        spec = bnd.get(side, {}) or {}
        if spec.get("profile") == "csv":
            p = _resolve(base, spec.get("path", ""))
            if not p.exists():
                raise ConfigError(f"boundary CSV not found: {p}")
            bnd = {**bnd, side: {**spec, "path": p}}

    out = _section(raw, "output")
    tol = {**DEFAULT_TOL, **_section(raw, "tolerances")}
    orc = _section(raw, "oracle")
    if "tau" in orc and float(orc["tau"]) != tau:
        raise ConfigError(f"oracle tau {orc['tau']} differs from slab tau {tau}")
    cache = _section(raw, "cache")
    cdir = cache_dir if cache_dir is not None else cache.get("dir")
    return RunConfig(
        path=path, raw=raw, coeffs=coeffs, model=model, nodes=np.asarray(nodes), tau=tau,
        boundary=bnd, forcing=forcing, x_out=_x_samples(out.get("x"), tau),
        solution_csv=_resolve(base, out["solution_csv"]) if out.get("solution_csv") else None,
        report_json=_resolve(base, out["report_json"]) if out.get("report_json") else None,
        tolerances=tol, oracle=orc, cache_dir=_resolve(base, cdir) if cdir else None,
        timings=bool(out.get("timings", False)), tmodel=tmodel, extra=extra,
    )


def _boundary_data(cfg: RunConfig, k):
    m = cfg.model
    plus = io.boundary_profile(cfg.boundary.get("plus", {}) or {}, cfg.nodes, k, m)
    if math.isinf(cfg.tau):
        return halfrange.BoundaryData(np.where(m.plus_mask, plus, 0.0), None, cfg.tau)
    minus = io.boundary_profile(cfg.boundary.get("minus", {}) or {}, cfg.nodes, k, m)
    return halfrange.BoundaryData(np.where(m.plus_mask, plus, 0.0), np.where(m.minus_mask, minus, 0.0), cfg.tau)


def _forcing(cfg: RunConfig):
    spec = cfg.forcing
    kind = spec.get("kind", "none")
    if kind == "none":
        return None
    tail = spec.get("tail", "zero" if math.isinf(cfg.tau) else "constant")
    rate = spec.get("rate")
    if kind == "constant":
        val = spec.get("value", 0.0)
        vec = np.full(cfg.model.n, float(val)) if np.ndim(val) == 0 else np.asarray(val, dtype=float)
        if vec.shape != (cfg.model.n,):
            raise ConfigError(f"constant forcing has {vec.size} entries for n = {cfg.model.n}")
        x_end = cfg.tau if math.isfinite(cfg.tau) else float(spec.get("x_end", 1.0))
        f = duhamel.ForcingFunction.constant(vec, x_end, tail=tail, rate=rate)
    else:
        f = io.read_forcing_csv(spec["path"], cfg.model, tail=tail, rate=rate)
    if cfg.tmodel is not None:
        f = abstract_kinetic.forcing_to_reduced(cfg.tmodel, f)
    return f


def _spectrum(k) -> dict:
    lam = k.eigenvalues
    return {"min_abs": float(np.min(np.abs(lam))), "max_abs": float(np.max(np.abs(lam))),
            "n_positive": int(np.sum(lam > 0)), "n_negative": int(np.sum(lam < 0)),
            "eigen_residual": k.eigen_residual()}


def _residuals_from_values(cfg, bd, x, values) -> dict:
    i0 = int(np.argmin(np.abs(x)))
    it = int(np.argmin(np.abs(x - cfg.tau))) if math.isfinite(cfg.tau) else None
    return halfrange.boundary_residuals_from_values(cfg.model, bd, values[i0],
                                                    None if it is None else values[it])


def _admissibility(cfg) -> dict | None:
    if cfg.coeffs is None:
        return None
    rep = problem_def.check_admissibility(cfg.coeffs)
    d = rep.to_dict()
    d["passed"] = rep.passed
    return d


def run(cfg: RunConfig, mode: str = "solve", strict: bool = False) -> tuple[int, dict]:
    """Execute a parsed config; returns ``(exit code, report)`` and writes artifacts."""
    t0 = time.perf_counter()
    timings = {}
    report = {"mode": mode, "config": str(cfg.path.name), "n": cfg.model.n,
              "tau": "halfspace" if math.isinf(cfg.tau) else cfg.tau, "model_key": cfg.model.key}
    if cfg.extra:
        report["setup"] = cfg.extra
    adm = _admissibility(cfg)
    report["admissibility"] = adm
    timings["admissibility"] = time.perf_counter() - t0
    adm_failed = adm is not None and not adm["passed"]

    status = EXIT_OK
    if mode == "check":
        status = EXIT_ADMISSIBILITY if adm_failed else EXIT_OK
        report["status"] = status
        _finish(cfg, report, timings)
        return status, report
    if strict and adm_failed:
        report["status"] = EXIT_ADMISSIBILITY
        report["error"] = "admissibility checks failed (--strict)"
        _finish(cfg, report, timings)
        return EXIT_ADMISSIBILITY, report

    try:
        t = time.perf_counter()
        k, hit = io.decompose_cached(cfg.model, cfg.cache_dir)
        timings["decomposition"] = time.perf_counter() - t
        report["cache_hit"] = hit if cfg.cache_dir is not None else None
        report["spectrum"] = _spectrum(k)
        report["gamma"] = k.gamma
        report["beta_proj"] = k.beta_proj
        bd = _boundary_data(cfg, k)
        f = _forcing(cfg)
        t = time.perf_counter()
        if f is None:
            sol = halfrange.solve(k, bd)
        else:
            sol = duhamel.solve_nonhomogeneous(k, bd, f)
        timings["solve"] = time.perf_counter() - t
        values = sol.evaluate(cfg.x_out)
    except ConfigError:
        raise
    except (FBKineticError, np.linalg.LinAlgError) as e:
        report["status"] = EXIT_SOLVER
        report["error"] = f"{type(e).__name__}: {e}"
        _finish(cfg, report, timings)
        return EXIT_SOLVER, report

    if math.isfinite(cfg.tau):
        report["contraction"] = {"norm_G_plus": sol.diagnostics.get("norm_G_plus"),
                                 "norm_G_minus": sol.diagnostics.get("norm_G_minus")}
    res = _residuals_from_values(cfg, bd, cfg.x_out, values)
    report["boundary_residuals"] = res
    if max(res.values()) > float(cfg.tolerances["boundary_residual"]):
        status = EXIT_SOLVER

    if mode == "compare":
        if math.isinf(cfg.tau):
            raise ConfigError("--compare needs a finite slab")
        t = time.perf_counter()
        nx = int(cfg.oracle.get("nx", 400))
        grading = float(cfg.oracle.get("grading", 2.0))
        solver = oracle.richardson if cfg.oracle.get("richardson", False) else oracle.brute_force_bvp
        try:
            ref = solver(cfg.model, bd, f, nx, grading)
        except FBKineticError as e:
            report["oracle"] = {"error": f"{type(e).__name__}: {e}"}
            report["status"] = EXIT_ORACLE
            _finish(cfg, report, timings)
            return EXIT_ORACLE, report
        d = oracle.l2_delta(cfg.model, ref.x, sol.evaluate(ref.x), ref.values)
        adj = _adjusted_bd(sol, bd)
        R = halfrange.build_R(k)
        a, b, _ = halfrange.solve_boundary_system(k, R, halfrange.build_G(k, cfg.tau, R), adj)
        ab, bb = oracle.direct_block_solve(k, R, cfg.tau, adj)
        scale = max(np.linalg.norm(np.r_[a, b]), np.finfo(float).tiny)
        block_gap = float(np.linalg.norm(np.r_[a - ab, b - bb]) / scale)
        timings["oracle"] = time.perf_counter() - t
        bound = float(cfg.tolerances["oracle_delta"])
        report["oracle"] = {"nx": nx, "grading": grading, "richardson": bool(cfg.oracle.get("richardson", False)),
                            "relative_l2": d["relative_l2"], "max_delta": d["max_per_x"],
                            "x": ref.x[:: max(1, nx // 50)].tolist(),
                            "per_x_delta": d["per_x"][:: max(1, nx // 50)].tolist(),
                            "block_solve_disagreement": block_gap, "bound": bound,
                            "solver_residual": ref.diagnostics["residual"]}
        if status == EXIT_OK and (d["max_per_x"] > bound or block_gap > 1e-9):
            status = EXIT_ORACLE

    report["status"] = status
    if cfg.solution_csv is not None:
        io.write_solution_csv(cfg.solution_csv, cfg.x_out, values, cfg.nodes, cfg.model.weight_masses)
    _finish(cfg, report, timings)
    return status, report


def _adjusted(sol, bd):
    """Boundary data seen by the homogeneous part of a (possibly forced) solution."""
    m = sol.decomposition.model
    if isinstance(sol, duhamel.NonhomogeneousSolution):
        ps = sol.particular
        return (bd.phi_plus - np.where(m.plus_mask, ps.minus(0.0)[0], 0.0),
                bd.phi_minus - np.where(m.minus_mask, ps.plus(bd.tau)[0], 0.0))
    return bd.phi_plus, bd.phi_minus


def _adjusted_bd(sol, bd):
    p, q = _adjusted(sol, bd)
    return halfrange.BoundaryData(p, q, bd.tau)


def _finish(cfg, report, timings):
    if cfg.timings:
        report["timings"] = timings
    if cfg.report_json is not None:
        io.write_json(cfg.report_json, report)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="fbkinetic", description="Half-range forward-backward solver.")
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--solve", dest="mode", action="store_const", const="solve")
    mode.add_argument("--check", dest="mode", action="store_const", const="check")
    mode.add_argument("--compare", dest="mode", action="store_const", const="compare")
    ap.add_argument("--strict", action="store_true", help="fail on admissibility check failures")
    ap.add_argument("--cache-dir", default=None, help="directory for the decomposition cache")
    ap.add_argument("config")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config, cache_dir=args.cache_dir)
        status, report = run(cfg, args.mode or "solve", args.strict)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    summary = {k: report.get(k) for k in ("status", "boundary_residuals", "gamma", "beta_proj") if k in report}
    if "oracle" in report:
        summary["oracle_relative_l2"] = report["oracle"].get("relative_l2")
    print(json.dumps(summary, default=float))
    return status


if __name__ == "__main__":
    sys.exit(main())
