import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fbkinetic import cli
from fbkinetic import io as fio
from fbkinetic.duhamel import ForcingFunction

BASE = """
problem:
  preset: signum_power
  params: {alpha: 0.5}
discretization: {M: 4, n: 64}
slab: {tau: 1.0}
boundary:
  plus: {profile: gaussian_bump, center: 2.0, width: 0.5}
  minus: {profile: zero}
output:
  x: {start: 0, stop: 1, num: 11}
  solution_csv: out/sol.csv
  report_json: out/report.json
"""


def _write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_solve_writes_artifacts(tmp_path):
    cfg = _write(tmp_path, BASE)
    assert cli.main([str(cfg)]) == 0
    rep = json.loads((tmp_path / "out/report.json").read_text())
    assert max(rep["boundary_residuals"].values()) < 1e-8
    assert rep["spectrum"]["n_positive"] == 32
    x, vals, nodes, masses = fio.read_solution_csv(tmp_path / "out/sol.csv")
    assert vals.shape == (11, 64) and nodes.size == 64 and masses.size == 64
    assert rep["admissibility"]["passed"]


def test_cache_hit_is_bit_identical(tmp_path):
    cfg = _write(tmp_path, BASE)
    assert cli.main(["--cache-dir", str(tmp_path / "cache"), str(cfg)]) == 0
    first = (tmp_path / "out/sol.csv").read_bytes()
    assert cli.main(["--cache-dir", str(tmp_path / "cache"), str(cfg)]) == 0
    rep = json.loads((tmp_path / "out/report.json").read_text())
    assert rep["cache_hit"] is True
    assert (tmp_path / "out/sol.csv").read_bytes() == first


def test_deterministic_reports(tmp_path):
    cfg = _write(tmp_path, BASE)
    cli.main([str(cfg)])
    a = (tmp_path / "out/report.json").read_bytes()
    cli.main([str(cfg)])
    assert (tmp_path / "out/report.json").read_bytes() == a


def test_missing_csv_is_config_error(tmp_path):
    cfg = _write(tmp_path, BASE.replace("preset: signum_power", "preset: custom_sampled\n  csv: missing.csv"))
    assert cli.main([str(cfg)]) == cli.EXIT_CONFIG
    assert not (tmp_path / "out").exists()


def test_tau_mismatch_is_config_error(tmp_path):
    cfg = _write(tmp_path, BASE + "oracle: {tau: 2.0}\n")
    assert cli.main(["--compare", str(cfg)]) == cli.EXIT_CONFIG
    assert not (tmp_path / "out").exists()


def test_bad_slab_config(tmp_path):
    cfg = _write(tmp_path, BASE.replace("slab: {tau: 1.0}", "slab: {tau: 1.0, halfspace: true}"))
    assert cli.main([str(cfg)]) == cli.EXIT_CONFIG


def test_compare_alpha_zero(tmp_path):
    text = BASE.replace("{alpha: 0.5}", "{alpha: 0.0}").replace("n: 64", "n: 128") + "oracle: {nx: 400}\n"
    cfg = _write(tmp_path, text)
    assert cli.main(["--compare", str(cfg)]) == 0
    rep = json.loads((tmp_path / "out/report.json").read_text())
    assert rep["oracle"]["relative_l2"] <= 2e-2 and rep["oracle"]["max_delta"] <= 2e-2
    assert rep["oracle"]["block_solve_disagreement"] <= 1e-9


def test_compare_matrix_model(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"L": [[2, 1], [1, 2]], "J": [1, -1]}))
    text = """
problem: {preset: matrix, json: m.json}
slab: {tau: 1.0}
boundary:
  plus: {profile: indicator}
  minus: {profile: indicator}
oracle: {nx: 400, richardson: true}
tolerances: {oracle_delta: 1.0e-9}
output: {report_json: out/r.json}
"""
    cfg = _write(tmp_path, text)
    assert cli.main(["--compare", str(cfg)]) == 0
    rep = json.loads((tmp_path / "out/r.json").read_text())
    assert rep["oracle"]["max_delta"] <= 1e-9


def test_oracle_mismatch_exit(tmp_path):
    text = BASE + "oracle: {nx: 20, grading: 1.0}\ntolerances: {oracle_delta: 1.0e-12}\n"
    cfg = _write(tmp_path, text)
    assert cli.main(["--compare", str(cfg)]) == cli.EXIT_ORACLE


def test_fokker_planck_check(tmp_path):
    text = BASE.replace("preset: signum_power", "preset: fokker_planck").replace(
        "{alpha: 0.5}", "{a0: 0.0, a1: 1.0, a2: 1.0}")
    cfg = _write(tmp_path, text)
    code = cli.main(["--check", str(cfg)])
    rep = json.loads((tmp_path / "out/report.json").read_text())
    assert rep["admissibility"]["simplicity"][0]["passed"]
    # w = mu/(mu^2+|mu|) decays like 1/|mu|: the tail exponent is -1 and the tail conditions fail
    assert rep["admissibility"]["kos"]["alpha"] == [-1.0, -1.0]
    assert code == cli.EXIT_ADMISSIBILITY
    assert cli.main(["--strict", str(cfg)]) == cli.EXIT_ADMISSIBILITY
    assert cli.main([str(cfg)]) == 0


def test_forcing_csv_and_halfspace(tmp_path):
    cfg0 = cli.load_config(_write(tmp_path, BASE))
    m = cfg0.model
    xs = np.linspace(0, 1, 11)
    fio.write_forcing_csv(tmp_path / "f.csv", ForcingFunction(xs, np.outer(1 - xs, np.ones(m.n))), m)
    text = BASE + "forcing: {kind: csv, path: f.csv}\n"
    assert cli.main([str(_write(tmp_path, text))]) == 0
    half = BASE.replace("slab: {tau: 1.0}", "slab: {halfspace: true}").replace(
        "  minus: {profile: zero}\n", "") + "forcing: {kind: csv, path: f.csv, tail: zero}\n"
    assert cli.main([str(_write(tmp_path, half, "h.yaml"))]) == 0
    rep = json.loads((tmp_path / "out/report.json").read_text())
    assert rep["tau"] == "halfspace"


def test_forcing_csv_grid_mismatch(tmp_path):
    xs = np.linspace(0, 1, 3)
    (tmp_path / "f.csv").write_text("# grid_hash=deadbeef\nx,f0\n0,1\n1,1\n")
    cfg = _write(tmp_path, BASE + "forcing: {kind: csv, path: f.csv}\n")
    assert cli.main([str(cfg)]) == cli.EXIT_CONFIG


def test_kinetic_preset(tmp_path):
    (tmp_path / "t.json").write_text(json.dumps({"T": [2.0, -3.0], "A": [[4, 1], [1, 4]]}))
    text = """
problem: {preset: kinetic, json: t.json}
slab: {tau: 1.0}
boundary:
  plus: {profile: indicator}
  minus: {profile: indicator}
output: {report_json: out/r.json}
"""
    assert cli.main([str(_write(tmp_path, text))]) == 0
    rep = json.loads((tmp_path / "out/r.json").read_text())
    assert rep["setup"]["pairing_defect"] <= 1e-12


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, BASE)
    r = subprocess.run([sys.executable, "-m", "fbkinetic", "--solve", str(cfg)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["status"] == 0
