"""Subprocess tests of the command-line interface.

Determinism matters most here: identical invocations must produce identical
bytes, stdout or files, on either kernel backend.
"""

import json
import os
import subprocess
import sys

import pytest


def run_cli(*args, env_extra=None, check=False):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run(
        [sys.executable, "-m", "abrikosov", *args],
        capture_output=True, text=True, env=env,
    )
    if check and proc.returncode != 0:
        raise AssertionError(
            f"cli failed ({proc.returncode}): {proc.stderr}\n{proc.stdout}"
        )
    return proc


def test_version_flag():
    proc = run_cli("--version", check=True)
    assert proc.stdout.strip() == "0.1.0"


def test_lattice_eta_json_shape():
    proc = run_cli("lattice", "--tau", "0.5", "0.8660254037844386", check=True)
    doc = json.loads(proc.stdout)
    assert doc["version"] == "0.1.0"
    assert doc["run_config"]["command"] == "lattice"
    assert doc["report"]["route"] == "eta"
    assert abs(doc["report"]["value"] - (-0.201089447611682)) < 1e-9


def test_lattice_basis_input():
    # unit-covolume square lattice: density 2 pi, w = 2 pi (w1 - log(2 pi)/4)
    proc = run_cli("lattice", "--basis", "1", "0", "0", "1", check=True)
    doc = json.loads(proc.stdout)
    assert abs(doc["report"]["value"] - (-4.117160612331945)) < 1e-7
    # at the normalized covolume the default density is 1
    side = "2.5066282746310002"  # sqrt(2 pi)
    proc = run_cli("lattice", "--basis", side, "0", "0", side, check=True)
    doc = json.loads(proc.stdout)
    assert abs(doc["report"]["value"] - (-0.195797196353418)) < 1e-9


def test_lattice_routes_agree():
    eta = json.loads(run_cli("lattice", "--tau", "0", "1", check=True).stdout)
    fourier = json.loads(run_cli("lattice", "--tau", "0", "1",
                                 "--route", "fourier", check=True).stdout)
    assert abs(eta["report"]["value"] - fourier["report"]["value"]) < 1e-5
    diff = json.loads(run_cli("lattice", "--tau", "0", "1", "--route",
                              "zetadiff-vs", check=True).stdout)
    assert abs(diff["report"]["value"] - 0.00529225125826413) < 1e-6


def test_exit_code_2_on_bad_modulus():
    proc = run_cli("lattice", "--tau", "0", "-1")
    assert proc.returncode == 2
    assert "input error" in proc.stderr
    assert "NonPositiveImaginaryPart" in proc.stderr


def test_exit_code_2_on_usage_error():
    proc = run_cli("lattice")          # neither --tau nor --basis
    assert proc.returncode == 2
    proc = run_cli("lattice", "--tau", "0", "1", "--basis", "1", "0", "0", "1")
    assert proc.returncode == 2


def test_exit_code_3_on_numerical_failure():
    proc = run_cli("lattice", "--tau", "0", "0.05",
                   "--abs-tol", "1e-15", "--max-terms", "3")
    assert proc.returncode == 3
    assert "numerical error" in proc.stderr
    assert "PrecisionUnreachable" in proc.stderr


def test_lattice_rerun_byte_identical(tmp_path):
    args = ("lattice", "--tau", "0.21", "1.33", "--m", "2.5")
    a = run_cli(*args, check=True).stdout
    b = run_cli(*args, check=True).stdout
    assert a == b
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(*args, "--output", str(out1), check=True)
    run_cli(*args, "--output", str(out2), check=True)
    assert out1.read_bytes() == out2.read_bytes()


def test_moduli_scan_outputs(tmp_path):
    csv_path = tmp_path / "grid.csv"
    args = ("moduli-scan", "--resolution", "16", "--refine-iters", "10",
            "--csv", str(csv_path))
    proc = run_cli(*args, check=True)
    doc = json.loads(proc.stdout)
    assert doc["run_config"]["resolution"] == 16
    assert abs(doc["scan"]["argmin"]["a"] - 0.5) < 0.1
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == "a,b,W"
    assert len(lines) == 1 + doc["scan"]["n_points"]
    csv2 = tmp_path / "grid2.csv"
    run_cli("moduli-scan", "--resolution", "16", "--refine-iters", "10",
            "--csv", str(csv2), check=True)
    assert csv_path.read_bytes() == csv2.read_bytes()


def test_fekete_small_run(tmp_path):
    trace = tmp_path / "trace.csv"
    args = ("fekete", "--n", "2", "--restarts", "1", "--max-iters", "400",
            "--trace-csv", str(trace))
    proc = run_cli(*args, check=True)
    doc = json.loads(proc.stdout)
    assert doc["run_config"]["n"] == 2
    assert doc["final_grad_norm"] < 1e-6
    assert abs(doc["energy"]["value"] - (-0.738167991734824)) < 1e-6
    assert len(doc["config"]["points"]) == 2
    lines = trace.read_text().strip().split("\n")
    assert lines[0] == "iter,energy,grad_norm"
    assert len(lines) >= 2
    rerun = run_cli(*args, check=True)
    assert rerun.stdout == proc.stdout


def test_fekete_elkies_tiny():
    proc = run_cli("fekete", "--elkies", "--n-max", "2", "--restarts", "2",
                   "--max-iters", "400", check=True)
    doc = json.loads(proc.stdout)
    rows = doc["elkies"]["rows"]
    assert [r["n"] for r in rows] == [2]
    assert abs(rows[0]["e_min"] - (-0.693147180559945)) < 1e-5
    assert doc["elkies"]["band_ok"] is True


def test_obstacle_basic_and_field_csv(tmp_path):
    field = tmp_path / "field.csv"
    args = ("obstacle", "--disk", "--h", "0.125", "--m", "0.9",
            "--tol", "1e-8", "--field-csv", str(field))
    proc = run_cli(*args, check=True)
    doc = json.loads(proc.stdout)
    assert doc["run_config"]["m"] == 0.9
    assert doc["grid"]["h"] == 0.125
    levels = doc["fields"]
    assert len(levels) == 1 and levels[0]["m"] == 0.9
    assert levels[0]["residual"] <= 1e-8
    lines = field.read_text().strip().split("\n")
    assert lines[0] == "x,y,H,active"
    rerun = run_cli(*args, "--output", str(tmp_path / "o.json"), check=True)
    assert json.loads((tmp_path / "o.json").read_text()) == doc


def test_obstacle_field_csv_needs_single_level():
    proc = run_cli("obstacle", "--disk", "--h", "0.125",
                   "--m-grid", "0.85", "0.9", "--field-csv", "x.csv")
    assert proc.returncode == 2


def test_obstacle_propa1_suite():
    proc = run_cli("obstacle", "--disk", "--h", "0.0625", "--tol", "1e-9",
                   "--suite", "propA1", check=True)
    doc = json.loads(proc.stdout)
    suite = doc["suite"]
    assert suite["all_pass"] is True
    assert suite["empty_below_threshold"] is True
    assert suite["full_at_top"] is True
    assert suite["monotone_in_m"] is True
    assert suite["mass_spans_domain"] is True


def test_obstacle_polygon_domain():
    proc = run_cli("obstacle", "--polygon", "-1", "-1", "1", "-1", "1", "1",
                   "-1", "1", "--h", "0.125", "--m", "0.95", "--tol", "1e-8",
                   check=True)
    doc = json.loads(proc.stdout)
    assert doc["fields"][0]["active_cells"] >= 0
    bad = run_cli("obstacle", "--polygon", "-1", "-1", "1", "1", "1", "-1",
                  "--h", "0.125", "--m", "0.9")
    assert bad.returncode == 2
    assert "NonConvexDomain" in bad.stderr


def test_backend_parity_of_cli_bytes():
    args = ("obstacle", "--disk", "--h", "0.125", "--m", "0.9", "--tol", "1e-8")
    fast = run_cli(*args, check=True).stdout
    plain = run_cli(*args, env_extra={"ABRIKOSOV_NO_NUMBA": "1"},
                    check=True).stdout
    assert fast == plain
    args = ("lattice", "--tau", "0.5", "0.8660254037844386")
    fast = run_cli(*args, check=True).stdout
    plain = run_cli(*args, env_extra={"ABRIKOSOV_NO_NUMBA": "1"},
                    check=True).stdout
    assert fast == plain
