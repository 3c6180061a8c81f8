"""
Command line tests for `python -m probepath`.

- gen-scene -> matrix -> solve / compare on a small generated panel
- plan writes the report, program CSV and OBJ; export converts the report
- input errors exit with 1 and an "Error:" message
"""
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]

SCENE = {
    "name": "cli",
    "primitives": [{"type": "panel", "origin": [0, 0, 0], "size": [60, 60], "spacing": 4, "mp_count": 5}],
}
CONFIG = {
    "origin": [30, 30, 60],
    "solver": {"sa_cooling_rate": 0.9, "sa_iterations_per_temperature": 100,
               "ga_generations": 20, "aco_iterations": 10},
}


def run_command(args, cwd=REPO_ROOT):
    env = {k: v for k, v in os.environ.items() if not k.startswith("PROBEPATH_")}
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [str(REPO_ROOT), env.get("PYTHONPATH")]))
    cmd = [sys.executable, "-m", "probepath"] + args
    result = subprocess.run(cmd, capture_output=True, text=True, check=False, cwd=cwd, env=env)
    return result.returncode, result.stdout.strip(), result.stderr.strip()


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "scene.json").write_text(json.dumps(SCENE), encoding="utf-8")
    (tmp_path / "config.json").write_text(json.dumps(CONFIG), encoding="utf-8")
    return tmp_path


def test_no_arguments_prints_help():
    code, _, stderr = run_command([])
    assert code == 1
    assert "usage: probepath" in stderr


def test_gen_scene(workspace):
    code, stdout, _ = run_command(["gen-scene", str(workspace / "scene.json"),
                                   "--nodes-out", str(workspace / "nodes.csv"),
                                   "--mps-out", str(workspace / "mps.csv")])
    assert code == 0
    assert stdout == "256 nodes, 5 MPs"
    assert len((workspace / "mps.csv").read_text(encoding="utf-8").splitlines()) == 5


def test_matrix_then_solve_and_compare(workspace):
    cfg = ["--config", str(workspace / "config.json")]
    matrix = str(workspace / "T.csv")
    code, stdout, _ = run_command(cfg + ["matrix", "--scene", str(workspace / "scene.json"), "--out", matrix])
    assert code == 0
    assert stdout.startswith("6x6 matrix")

    code, stdout, _ = run_command(cfg + ["solve", matrix, "--solver", "brute", "--json"])
    assert code == 0
    result = json.loads(stdout)
    assert result["solver"] == "BruteForce"
    assert sorted(result["order"]) == ["1", "2", "3", "4", "5"]
    assert result["tainted"] is False
    assert result["inaccessible"] == []

    code, stdout, _ = run_command(cfg + ["compare", matrix, "--seeds", "2", "--json"])
    assert code == 0
    rows = json.loads(stdout)
    assert {row["solver"] for row in rows} == {"sa", "ga", "aco"}
    assert all(row["best"] >= result["total_time"] - 1e-9 for row in rows)


def test_plan_and_export(workspace):
    out = workspace / "plan.json"
    code, stdout, _ = run_command(["--config", str(workspace / "config.json"), "--seed", "2",
                                   "plan", "--scene", str(workspace / "scene.json"), "--out", str(out),
                                   "--csv", str(workspace / "plan.csv"), "--obj", str(workspace / "plan.obj")])
    assert code == 0
    assert stdout.startswith("5 MPs")
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["config"]["seed"] == 2
    assert len(report["tour_ids"]) == 5
    assert (workspace / "plan.obj").read_text(encoding="utf-8").startswith("# probe trajectory")

    code, _, _ = run_command(["export", str(out), "--format", "csv", "--out", str(workspace / "again.csv")])
    assert code == 0
    assert (workspace / "again.csv").read_text(encoding="utf-8") == \
        (workspace / "plan.csv").read_text(encoding="utf-8")


def test_bad_node_file(workspace):
    (workspace / "nodes.csv").write_text("0,0,0\n1,2\n", encoding="utf-8")
    (workspace / "mps.csv").write_text("a,0,0,0,0,0,1\n", encoding="utf-8")
    code, _, stderr = run_command(["matrix", "--nodes", str(workspace / "nodes.csv"),
                                   "--mps", str(workspace / "mps.csv"), "--out", str(workspace / "T.csv")])
    assert code == 1
    assert "Error:" in stderr and "nodes.csv:2" in stderr


def test_missing_matrix(workspace):
    code, _, stderr = run_command(["solve", str(workspace / "missing.csv")])
    assert code == 1
    assert "Error:" in stderr


def test_non_numeric_origin(workspace):
    (workspace / "bad.json").write_text(json.dumps({"origin": ["x", 0, 0]}), encoding="utf-8")
    code, _, stderr = run_command(["--config", str(workspace / "bad.json"), "gen-scene",
                                   str(workspace / "scene.json"), "--nodes-out", str(workspace / "n.csv"),
                                   "--mps-out", str(workspace / "m.csv")])
    assert code == 1
    assert "Error:" in stderr
    assert "Traceback" not in stderr
