"""End-to-end tests of the command-line front end (in-process unless noted)."""

import csv
import io
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from itdopf import cli
from itdopf.problems.case import DATA_DIR

CASE5 = ["--case", "case5_ieee4"]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def case5_files(tmp_path, boundary_bus="6"):
    """Copy the bundled 5-bus case into ``tmp_path``, optionally re-pointing the link."""
    pm = shutil.copy(DATA_DIR / "case5_withload.m", tmp_path / "case5.m")
    pmd = shutil.copy(DATA_DIR / "feeder_ieee4.json", tmp_path / "feeder_ieee4.json")
    link = [{"transmission_boundary": boundary_bus, "distribution_boundary": "sourcebus",
             "distribution_file": "feeder_ieee4.json"}]
    bnd = tmp_path / "boundary.json"
    bnd.write_text(json.dumps(link))
    return ["--pm", str(pm), "--pmd", str(pmd), "--boundary", str(bnd)]


def test_solve_bundled_case_writes_result(tmp_path, capsys):
    out = tmp_path / "res" / "r.json"
    code, stdout, _ = run(["solve", *CASE5, "--out", str(out)], capsys)
    assert code == cli.EXIT_OK
    assert stdout == ""  # results only go to --out
    doc = json.loads(out.read_text())
    assert doc["status"] == "Optimal"
    assert not [p for p in out.parent.iterdir() if p.name.startswith(".")]  # no temp files left


def test_solve_from_files_to_stdout(tmp_path, capsys):
    code, stdout, _ = run(["solve", *case5_files(tmp_path), "--formulation", "nfa-nfau"], capsys)
    assert code == 0
    assert json.loads(stdout)["status"] == "Optimal"


def test_boundary_to_missing_bus_is_input_error(tmp_path, capsys):
    code, stdout, err = run(["solve", *case5_files(tmp_path, boundary_bus="77")], capsys)
    assert code == cli.EXIT_INPUT
    assert "77" in err and stdout == ""


def test_missing_file_is_input_error(tmp_path, capsys):
    code, _, err = run(["solve", "--pm", str(tmp_path / "nope.m")], capsys)
    assert code == 1 and "nope.m" in err


def test_infeasible_power_flow_exit_code(tmp_path, capsys):
    opf = tmp_path / "opf.json"
    assert run(["solve", *CASE5, "--out", str(opf)], capsys)[0] == 0
    doc = json.loads(opf.read_text())
    base = doc["transmission"]["base_mva"]
    for g in doc["transmission"]["generators"]:
        g["pg_mw"] -= 100.0 * base
    opf.write_text(json.dumps(doc))
    code, _, err = run(["solve", *CASE5, "--problem", "pf", "--setpoints", str(opf),
                        "--formulation", "nfa-nfau"], capsys)
    assert code == cli.EXIT_INFEASIBLE
    assert "Infeasible" in err


def test_solver_failure_exit_code(capsys):
    code, stdout, _ = run(["solve", *CASE5, "--max-iter", "3"], capsys)
    assert code == cli.EXIT_SOLVER
    assert json.loads(stdout)["status"] == "IterationLimit"


def test_independent_mode(capsys):
    code, stdout, _ = run(["solve", *CASE5, "--mode", "independent", "--reserve", "0.1"], capsys)
    assert code == 0
    assert json.loads(stdout)["case"]


def test_bad_formulation_rejected_by_parser(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve", *CASE5, "--formulation", "dcp"])
    assert exc.value.code == 2  # argparse usage error
    capsys.readouterr()


def test_compare_all_formulations(tmp_path, capsys):
    stem = tmp_path / "cmp"
    code, _, err = run(["compare", *CASE5, "--out", str(stem)], capsys)
    assert code == 0
    rows = csv_rows((tmp_path / "cmp.csv").read_text())
    assert [r["formulation"] for r in rows] == ["acp-acpu", "acr-acru", "ivr-ivru", "nfa-nfau"]
    assert all(r["status"] == "Optimal" for r in rows)
    assert len(json.loads((tmp_path / "cmp.json").read_text())["rows"]) == 4
    assert "difference" in err


def test_compare_single_formulation(capsys):
    code, stdout, _ = run(["compare", *CASE5, "--formulations", "acp-acpu"], capsys)
    assert code == 0
    assert [r["formulation"] for r in csv_rows(stdout)] == ["acp-acpu"]


def test_compare_marks_failing_row(capsys):
    # ten iterations are enough for NFA but not for ACP on this case
    code, stdout, err = run(["compare", *CASE5, "--formulations", "acp-acpu,nfa-nfau",
                             "--max-iter", "10"], capsys)
    assert code == cli.EXIT_SOLVER
    rows = {r["formulation"]: r for r in csv_rows(stdout)}
    assert rows["acp-acpu"]["status"] == "IterationLimit"
    assert rows["nfa-nfau"]["status"] == "Optimal"
    failed = [line for line in err.splitlines() if line.endswith("FAILED")]
    assert len(failed) == 1 and failed[0].startswith("acp-acpu")


def test_validate_clean_and_corrupted(tmp_path, capsys):
    code, stdout, _ = run(["validate", *CASE5], capsys)
    assert code == 0 and stdout.startswith("ok")
    code, stdout, _ = run(["validate", *case5_files(tmp_path, boundary_bus="77")], capsys)
    assert code == 1
    assert "unknown transmission bus 77" in stdout
    assert stdout.rstrip().endswith("1 violation(s)")


def test_check_derivs(tmp_path, capsys):
    out = tmp_path / "derivs.txt"
    code, _, _ = run(["check-derivs", *CASE5, "--formulation", "acr-acru", "--points", "3",
                      "--out", str(out)], capsys)
    assert code == 0
    assert out.read_text().strip()


def test_sweep_three_rows(tmp_path, capsys):
    pmd = str(DATA_DIR / "feeder_ieee4.json")
    code, stdout, _ = run(["sweep", "--case", "case5_ieee4", "--pmd", pmd, "--attach", "2,3,4",
                           "--k", "1..3", "--formulation", "nfa-nfau"], capsys)
    assert code == 0
    rows = csv_rows(stdout)
    assert [int(r["k"]) for r in rows] == [1, 2, 3]
    nodes = [int(r["nodes"]) for r in rows]
    assert nodes[1] - nodes[0] == nodes[2] - nodes[1] > 0


def test_sweep_bad_range(capsys):
    with pytest.raises(SystemExit):
        cli.main(["sweep", *CASE5, "--attach", "2", "--k", "x..y"])
    capsys.readouterr()


def test_atomic_write_keeps_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "r.json"
    target.write_text("old")

    def boom(fd):
        raise OSError("disk full")

    monkeypatch.setattr(os, "fsync", boom)
    with pytest.raises(OSError):
        cli.write_atomic(target, "new contents")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]


def test_help_documents_exit_codes_and_module_entry():
    res = subprocess.run([sys.executable, "-m", "itdopf", "--help"], capture_output=True, text=True,
                         cwd=Path(__file__).parent)
    assert res.returncode == 0
    assert "exit codes" in res.stdout and "ITDOPF_LOG" in res.stdout


def test_debug_logging_goes_to_stderr(capsys, monkeypatch):
    monkeypatch.setenv("ITDOPF_LOG", "debug")
    code, stdout, err = run(["solve", *CASE5, "--formulation", "nfa-nfau"], capsys)
    assert code == 0
    assert json.loads(stdout)["status"] == "Optimal"
    assert "iter" in err
    monkeypatch.delenv("ITDOPF_LOG")
    cli.setup_logging()  # drop the handler bound to the captured stream
