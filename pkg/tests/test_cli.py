import csv
import json
import subprocess
import sys

import pytest

from geotool import verify
from geotool.cli import main


def test_simulate_builtin_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    assert main(["simulate", "paper-sim-1", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "final_tool_error" in text and "contract tool_error PASS" in text
    rows = list(csv.reader(out.open()))
    assert len(rows) == 1 + 1001
    assert rows[0][0] == "t" and rows[0][-1] == "sing_margin"


def test_simulate_json_and_file_scenario(tmp_path, capsys):
    doc = tmp_path / "free.cfg"
    doc.write_text("name = spin\ncontroller = free\nv1 = 1\nduration = 0.1\n")
    out = tmp_path / "run.json"
    assert main(["simulate", str(doc), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["scenario"] == "spin" and len(data["samples"]) == 11


def test_simulate_check_flag(capsys):
    # the stretched start is an equilibrium of the regulator for this reference
    assert main(["simulate", "paper-sim-2", "--check"]) == 1
    assert "contract tool_error FAIL" in capsys.readouterr().out


def test_simulate_reports_spurious_critical_points(capsys, tmp_path):
    doc = tmp_path / "c.cfg"
    doc.write_text("controller = constrained\nconstraint = ellipse\nellipse_a = 0.3\n"
                   "ellipse_b = 0.6\nx_d = 0, 0.3\nk1 = 40\nk = 30\ntheta1 = 1.5708\n"
                   "theta2 = 1.0708\nproject_initial = true\nduration = 0.1\n")
    assert main(["simulate", str(doc)]) == 0
    assert "spurious critical points of V on the constraint: 4" in capsys.readouterr().out


def test_simulate_missing_scenario(capsys):
    assert main(["simulate", "does-not-exist"]) == 1
    assert "no built-in scenario" in capsys.readouterr().err


def test_simulate_invalid_document(tmp_path, capsys):
    doc = tmp_path / "bad.cfg"
    doc.write_text("controller = free\ndt = -1\n")
    assert main(["simulate", str(doc)]) == 1
    assert "dt" in capsys.readouterr().err


def test_christoffel_check(capsys):
    assert main(["christoffel-check", "--n", "1000", "--tol", "1e-8"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_christoffel_check_impossible_tolerance(capsys):
    assert main(["christoffel-check", "--n", "10", "--tol", "1e-20"]) == 1


def test_singularity_map(tmp_path, capsys):
    out = tmp_path / "map.csv"
    assert main(["singularity-map", "--grid", "11", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 1 + 121
    assert main(["singularity-map", "--grid", "1"]) == 2


@pytest.mark.parametrize("argv", [["explode"], [], ["simulate"], ["christoffel-check", "--n", "x"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_verify_seeded_failure(monkeypatch, capsys):
    checks = [("demo.ok", lambda quick: (True, "fine")),
              ("demo.broken", lambda quick: (False, "seeded failure"))]
    monkeypatch.setattr(verify, "CHECKS", checks)
    assert main(["verify", "--quick"]) == 1
    out = capsys.readouterr().out
    assert "FAIL  demo.broken" in out and "PASS  demo.ok" in out


def test_verify_crashing_check_counts_as_failure(monkeypatch, capsys):
    def boom(quick):
        raise RuntimeError("kaput")

    monkeypatch.setattr(verify, "CHECKS", [("demo.crash", boom)])
    assert main(["verify"]) == 1
    assert "RuntimeError: kaput" in capsys.readouterr().out


def test_verify_all_passing(monkeypatch, capsys):
    monkeypatch.setattr(verify, "CHECKS", [("demo.ok", lambda quick: (True, ""))])
    assert main(["verify"]) == 0


@pytest.mark.parametrize("name", [name for name, _ in verify.CHECKS])
def test_each_check_flips_exit_code(monkeypatch, name, capsys):
    seeded = [(n, (lambda quick: (False, "seeded")) if n == name else (lambda quick: (True, "")))
              for n, _ in verify.CHECKS]
    monkeypatch.setattr(verify, "CHECKS", seeded)
    assert main(["verify"]) == 1
    assert f"FAIL  {name}" in capsys.readouterr().out


@pytest.mark.slow
def test_verify_quick_suite(capsys):
    lines = []
    failed = verify.run_checks(quick=True, out=lines.append)
    # the two reference scenarios that cannot meet their contracts; see README
    assert failed == ["harness.builtin_contracts"]
    detail = next(line for line in lines if "harness.builtin_contracts" in line)
    assert "failed: paper-constrained, paper-sim-2 " in detail


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "geotool", "explode"], capture_output=True, text=True)
    assert proc.returncode == 2
