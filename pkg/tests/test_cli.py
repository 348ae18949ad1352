from __future__ import annotations

import json
import subprocess
import sys

import pytest

from msmrsched import jobfile
from msmrsched.cli import analyze, main
from msmrsched.dca import BoundMode
from msmrsched.model import Pipeline, make_jobset

from conftest import dmr_instance, example1


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, js in (("ex1", example1((1000, 92, 1000, 1000))), ("dmr", dmr_instance()),
                     ("tight", example1((60, 55, 55, 50)))):
        paths[name] = tmp_path / f"{name}.txt"
        jobfile.save(js, paths[name])
    paths["bad"] = tmp_path / "bad.txt"
    paths["bad"].write_text("stages 1\npool 0 a\njob 0 0 x 1 a\n")
    paths["empty"] = tmp_path / "empty.txt"
    jobfile.save(make_jobset([], [], pipeline=Pipeline((("a",),))), paths["empty"])
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_bound_report(files, capsys):
    code, out, _ = run(capsys, "analyze", files["ex1"], "--mode", "eq2", "--check")
    assert code == 0
    assert "job 1: delta=92" in out and "D=92 ok" in out
    code, out, _ = run(capsys, "analyze", files["ex1"], "--mode", "eq2", "--order", "0,2,1,3",
                       "--json")
    report = json.loads(out)
    assert report["jobs"][1]["total"] == 87 and report["order"] == [0, 2, 1, 3]


def test_analyze_check_exit_codes(files, capsys):
    assert run(capsys, "analyze", files["tight"], "--method", "opdca", "--mode", "eq1")[0] == 0
    code, out, _ = run(capsys, "analyze", files["tight"], "--method", "opdca", "--mode", "eq1",
                       "--check")
    assert code == 1 and "status infeasible" in out


def test_dmr_flip_log(files, capsys):
    code, out, _ = run(capsys, "analyze", files["dmr"], "--method", "dmr", "--check")
    assert code == 0
    assert "flip 0>1 -> 1>0" in out
    assert "job 0: delta=23" in out and "job 1: delta=41" in out


def test_opt_and_admission(files, capsys):
    code, out, _ = run(capsys, "analyze", files["dmr"], "--method", "opt", "--json")
    assert json.loads(out)["pairwise"] == [[1, 0]]
    code, out, _ = run(capsys, "analyze", files["tight"], "--method", "dmr-admission", "--json")
    assert code == 0 and json.loads(out)["rejected"]


def test_usage_and_parse_errors(files, capsys):
    code, _, err = run(capsys, "analyze", files["bad"])
    assert code == 2 and "line 3, column 9" in err
    assert run(capsys, "analyze", files["ex1"], "--order", "0,1")[0] == 2
    assert run(capsys, "analyze", files["ex1"], "--method", "dmr", "--mode", "eq1")[0] == 2
    assert run(capsys, "analyze", "/nonexistent/file.txt")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["analyze", str(files["ex1"]), "--mode", "eq9"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_empty_jobset(files, capsys):
    code, out, _ = run(capsys, "analyze", files["empty"], "--method", "opdca", "--check")
    assert code == 0 and "status feasible" in out


def test_export_lp(files, capsys, tmp_path):
    code, out, _ = run(capsys, "export-lp", files["dmr"])
    assert code == 0 and "anti_0_1: X_0_1 + X_1_0 = 1" in out
    target = tmp_path / "p.lp"
    assert run(capsys, "export-lp", files["dmr"], "-o", target)[0] == 0
    assert target.read_text() == out


def test_generate_then_simulate(capsys, tmp_path):
    inst = tmp_path / "g.json"
    code, _, err = run(capsys, "generate", "--seed", "3", "--num-jobs", "12", "--num-aps", "4",
                       "--num-servers", "3", "--beta", "0.1", "--format", "json", "-o", inst)
    assert code == 0 and err.startswith("# H=")
    js = jobfile.load(inst)
    assert js.n == 12
    code, out, _ = run(capsys, "simulate", inst, "--method", "opdca", "--mode", "edge", "--trace")
    assert code == 0
    table = out.splitlines()
    header = table.index("job arrival deadline exit delay met")
    assert len(table) - header - 1 == 12
    code, out, _ = run(capsys, "simulate", inst, "--method", "dcmp", "--mode", "edge")
    assert code == 0 and out.startswith("job arrival")


def test_simulate_order_check(files, capsys):
    code, out, _ = run(capsys, "simulate", files["tight"], "--mode", "eq1", "--check")
    assert code == 1 and " 0\n" in out
    code, _, _ = run(capsys, "simulate", files["dmr"], "--method", "dmr", "--check")
    assert code == 0


def test_sweep_and_admit(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({
        "axis": "beta", "values": ["0.05"], "cases": 2, "methods": ["DM", "OPDCA"],
        "base": {"num_aps": 8, "num_servers": 6, "num_jobs": 30, "seed": 7}}))
    code, out, _ = run(capsys, "sweep", spec)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("axis,value,method") and len(lines) == 3
    code, out, _ = run(capsys, "admit", spec, "--cases", "1")
    assert code == 0 and out.splitlines()[1].startswith("beta,0.05,DM,1,")
    spec.write_text("{")
    assert run(capsys, "sweep", spec)[0] == 2


def test_analyze_function_direct(dmr_js):
    report = analyze(dmr_js, "dm", BoundMode.PREEMPTIVE_REFINED)
    assert report["status"] == "infeasible" and report["jobs"][1]["total"] == 70


def test_console_script_module():
    proc = subprocess.run([sys.executable, "-m", "msmrsched.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "export-lp" in proc.stdout
