import io
import json
import subprocess
import sys

import numpy as np
import pytest

from vortexlab import io as vio
from vortexlab.acceptance import _bump, separable_bump
from vortexlab.cli import EXIT_INVALID, EXIT_OK, EXIT_SOLVER, run
from vortexlab.coupled_kw import ProductGrid
from vortexlab.gauge_fix import random_perturbation
from vortexlab.surface import LatticeConnection, TorusGrid, reference_connection


def call(*argv):
    buf = io.StringIO()
    code = run([str(a) for a in argv], stdout=buf)
    return code, (json.loads(buf.getvalue()) if buf.getvalue() else None), buf.getvalue()


def test_invariant_examples():
    code, rep, _ = call("invariant", "--genus", 1, "--degree", 1, "--weights", "1,1")
    assert code == EXIT_OK
    assert rep["phi"] == "2" and rep["m"] == 2 and rep["dimension"] == 4
    code, rep, _ = call("invariant", "--genus", 0, "--degree", 1, "--weights", "2")
    assert rep["phi"] == "1/8"
    code, rep, _ = call("sw-ruled", "--d", 2, "--genus", 1, "--k", 1)
    assert code == EXIT_OK and rep["sw"] == "3"
    code, rep, _ = call("dimension", "--genus", 0, "--degree", 1, "--weights", "1,1")
    assert rep["dimension"] == 6
    assert rep["command"] == "dimension" and "versions" in rep and "timings" not in rep


def test_validation_exit_codes(tmp_path):
    assert call("invariant", "--genus", 3, "--degree", 0, "--weights", "1,1")[0] == EXIT_INVALID
    assert call("invariant", "--genus", 1, "--degree", 1, "--weights", "a,b")[0] == EXIT_INVALID
    assert call("invariant", "--genus", 1)[0] == EXIT_INVALID
    assert call("nonsense")[0] == EXIT_INVALID
    assert call()[0] == EXIT_INVALID
    assert call("kw", "--grid", 8, "--h", tmp_path / "missing.field", "--a", 1)[0] == EXIT_INVALID


def test_report_is_byte_identical_across_runs(tmp_path):
    args = ("invariant", "--genus", 2, "--degree", 3, "--weights", "1,2,2", "--report", tmp_path / "r.json")
    a = call(*args)[2]
    b = call(*args)[2]
    assert a == b == (tmp_path / "r.json").read_text()


def test_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"subcommand": "sw-ruled", "d": 2, "genus": 1, "k": 1}))
    code, rep, _ = call("--config", cfg)
    assert code == EXIT_OK and rep["sw"] == "3"
    cfg.write_text(json.dumps({"subcommand": "sw-ruled", "d": 2, "genus": 1, "k": 1, "colour": "red"}))
    assert call("--config", cfg)[0] == EXIT_INVALID
    cfg.write_text("{not json")
    assert call("--config", cfg)[0] == EXIT_INVALID
    cfg.write_text(json.dumps({"d": 2}))
    assert call("--config", cfg)[0] == EXIT_INVALID


def test_kw_round_trip(tmp_path):
    g = TorusGrid(16, 16)
    vio.write_field(tmp_path / "h.field", g, _bump(g, 0.5, 0.5, 0.15, 0.1), "scalar")
    out = tmp_path / "kw.json"
    code, rep, _ = call("kw", "--grid", 16, "--h", tmp_path / "h.field", "--a", 2.0, "--out", out, "--timings")
    assert code == EXIT_OK and rep["solve"]["residual_sup"] <= 1e-10 and "timings" in rep
    _, g2, u = vio.read_field(tmp_path / rep["field_file"])
    assert g2 == g and u.shape == g.shape
    assert float(np.min(u)) == rep["u_min"]
    # mean mode and a grid mismatch
    code, rep, _ = call("kw", "--grid", 16, "--h", tmp_path / "h.field", "--mode", "mean", "--t", 0.3)
    assert code == EXIT_OK
    assert call("kw", "--grid", 8, "--h", tmp_path / "h.field", "--a", 1)[0] == EXIT_INVALID
    assert call("kw", "--grid", 16, "--h", tmp_path / "h.field", "--a", -1)[0] == EXIT_INVALID
    assert call("kw", "--grid", 16, "--h", tmp_path / "h.field", "--a", 1, "--tol", 0)[0] == EXIT_INVALID


def test_coupled_kw(tmp_path):
    pg = ProductGrid(TorusGrid(4, 4), TorusGrid(8, 8))
    (tmp_path / "h.field").write_text(vio.product_field_to_text(pg.sigma, pg.fiber, separable_bump(pg)))
    out = tmp_path / "c.json"
    code, rep, _ = call("coupled-kw", "--grid-sigma", 4, "--grid-s", 8, "--h", tmp_path / "h.field", "--a", 2.0,
                        "--out", out)
    assert code == EXIT_OK and rep["residual_sup"] <= 1e-9 and rep["certificate"]["passed"]
    s, f, u = vio.read_product_field(tmp_path / rep["field_file"])
    assert u.shape == pg.shape
    code = call("coupled-kw", "--grid-sigma", 64, "--grid-s", 8, "--h", tmp_path / "h.field", "--a", 2.0)[0]
    assert code == EXIT_INVALID


def test_vortex_and_energy_check(tmp_path):
    (tmp_path / "z.json").write_text(json.dumps([[[0.3, 0.4]]]))
    out = tmp_path / "v.json"
    code, rep, _ = call("vortex", "--grid", 32, "--degree", 1, "--zeros", tmp_path / "z.json", "--tau", 10,
                        "--out", out)
    assert code == EXIT_OK and rep["solve"]["zeros_ok"]
    cfg = tmp_path / rep["config_file"]
    code, rep, _ = call("energy-check", "--config", cfg, "--tau", 10)
    assert code == EXIT_OK
    assert abs(rep["energy"]["energy"] - rep["energy"]["topological_exact"]) < 0.1
    assert call("vortex", "--grid", 32, "--degree", 1, "--zeros", tmp_path / "z.json", "--tau", 6)[0] == EXIT_INVALID


def test_gauge_fix(tmp_path):
    g = TorusGrid(16, 16)
    rng = np.random.default_rng(0)
    bs, bt = random_perturbation(g, "su2", rng, 0.5)
    ps, pt = random_perturbation(g, "su2", rng, 0.05)
    vio.write_connection(tmp_path / "a0.field", LatticeConnection(g, "su2", bs, bt))
    vio.write_connection(tmp_path / "a.field", LatticeConnection(g, "su2", bs + ps, bt + pt))
    out = tmp_path / "gf.json"
    base = ("gauge-fix", "--group", "su2", "--grid", 16, "--a0", tmp_path / "a0.field")
    code, rep, _ = call(*base, "--a", tmp_path / "a.field", "--out", out)
    assert code == EXIT_OK and rep["residual_sup"] <= 1e-10
    code, rep, _ = call(*base, "--a", tmp_path / rep["field_file"])
    assert code == EXIT_OK and rep["steps"] == 0
    assert call(*base, "--a", tmp_path / "a.field", "--max-iter", 1)[0] == EXIT_SOLVER
    vio.write_connection(tmp_path / "u1.field", reference_connection(g, 1))
    assert call(*base, "--a", tmp_path / "u1.field")[0] == EXIT_INVALID


def test_selftest_subset():
    code, rep, _ = call("selftest", "--only", "1,2")
    assert code == EXIT_OK and rep["passed"]
    assert [c["id"] for c in rep["criteria"]] == [1, 2]
    assert call("selftest", "--only", "99")[0] == EXIT_INVALID


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vortexlab", "sw-ruled", "--d", "1", "--genus", "3", "--k", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["sw"] == "8"
