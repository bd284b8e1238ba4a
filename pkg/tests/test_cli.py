import json
import os

import pytest

from qground import strips
from qground.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_usage_error_exit_code(capsys):
    code, _, err = run(capsys, "solve")  # missing --problem
    assert code == 1
    assert "usage error" in err


def test_missing_file_is_runtime_failure(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--problem", str(tmp_path / "nope.pddl"))
    assert code == 2


def test_gen_instances_and_manifest(capsys, tmp_path):
    out = tmp_path / "inst"
    code, _, _ = run(
        capsys, "gen-instances", "--domain", "visitall", "--count", "3",
        "--seed", "5", "-o", str(out),
    )
    assert code == 0
    files = sorted(os.listdir(out))
    assert "domain.pddl" in files
    assert sum(f.startswith("problem-") for f in files) == 3
    manifest = json.loads((out / "instances.manifest.json").read_text())
    assert manifest["command"] == "gen-instances"
    assert manifest["config"]["seed"] == 5
    domain = strips.parse_domain((out / "domain.pddl").read_text())
    problem = strips.parse_problem((out / "problem-0000.pddl").read_text(), domain)
    assert problem.goal.variables


def test_config_file_and_overrides(capsys, tmp_path):
    config = tmp_path / "gen.cfg"
    config.write_text(
        "domain = blocks\nobjects = 3 4  # small towers\nvariables = 1 2\nneq = none\n"
    )
    out = tmp_path / "inst"
    code, _, _ = run(
        capsys, "gen-instances", "--config", str(config), "--set", "colors=2 2",
        "--count", "2", "-o", str(out),
    )
    assert code == 0
    manifest = json.loads((out / "instances.manifest.json").read_text())
    assert manifest["config"]["generator"]["domain"] == "blocks"
    assert manifest["config"]["generator"]["colors"] == [2, 2]


def test_gen_dataset_deterministic(capsys, tmp_path):
    args = [
        "gen-dataset", "--domain", "blocks", "--samples", "20", "--instances", "4",
        "--seed", "7", "--set", "objects=3 4",
    ]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(capsys, *args, "-o", str(a))[0] == 0
    assert run(capsys, *args, "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.jsonl.manifest.json").exists()


SOLVED_AT_INIT = """
(define (problem p) (:domain visitall)
  (:objects a b)
  (:init (connected a b) (connected b a) (red a) (blue b) (at-robot a) (visited a))
  (:goal (exists (?x) (and (red ?x) (visited ?x)))))
"""


@pytest.fixture()
def visitall_dir(tmp_path):
    from qground import generators

    (tmp_path / "domain.pddl").write_text(
        strips.print_domain(generators.builtin_domain("visitall"))
    )
    (tmp_path / "p0.pddl").write_text(SOLVED_AT_INIT)
    return tmp_path


def test_oracle_prints_zero_when_solved_at_init(capsys, visitall_dir):
    code, out, _ = run(
        capsys, "oracle", "--problem", str(visitall_dir / "p0.pddl"),
        "--domain", str(visitall_dir / "domain.pddl"),
    )
    assert code == 0
    assert out.strip() == "0"


def test_compile_then_solve_costs_vstar_plus_one(capsys, tmp_path, visitall_dir):
    problem = visitall_dir / "p0.pddl"
    domain = visitall_dir / "domain.pddl"
    code, out, _ = run(capsys, "oracle", "--problem", str(problem), "--domain", str(domain))
    vstar = int(out.strip())
    compiled = tmp_path / "compiled.pddl"
    code, out, _ = run(
        capsys, "compile-dnf", "--problem", str(problem), "--domain", str(domain),
        "-o", str(compiled),
    )
    assert code == 0
    code, out, _ = run(capsys, "solve", "--problem", str(compiled), "--mode", "optimal-bfs")
    assert code == 0
    assert out.strip().splitlines()[-1] == f"cost: {vstar + 1}"


def test_train_ground_eval_pipeline(capsys, tmp_path):
    data = tmp_path / "tiny.jsonl"
    code, _, _ = run(
        capsys, "gen-dataset", "--domain", "blocks", "--samples", "30", "--instances", "5",
        "--seed", "3", "--set", "objects=3 3", "--set", "variables=1 1",
        "--set", "colors=2 2", "-o", str(data),
    )
    assert code == 0
    model = tmp_path / "model.json"
    code, _, _ = run(
        capsys, "train", "--dataset", str(data), "--k", "4", "--layers", "2",
        "--epochs", "2", "--batch-size", "8", "--seed", "1", "-o", str(model),
    )
    assert code == 0
    assert model.exists() and (tmp_path / "model.json.log.jsonl").exists()

    inst = tmp_path / "inst"
    code, _, _ = run(
        capsys, "gen-instances", "--domain", "blocks", "--count", "2", "--seed", "11",
        "--set", "objects=3 3", "--set", "variables=1 1", "--set", "colors=2 2",
        "-o", str(inst),
    )
    assert code == 0
    code, out, _ = run(
        capsys, "ground", "--problem", str(inst / "problem-0000.pddl"),
        "--domain", str(inst / "domain.pddl"), "--model", str(model),
    )
    assert code == 0
    assert "step" in out and "final (:goal" in out

    report = tmp_path / "report"
    code, out, _ = run(
        capsys, "eval", "--dir", str(inst), "--model", str(model), "--baselines",
        "--timeout-secs", "20", "-o", str(report),
    )
    assert code == 0
    assert (report / "report.csv").exists()
    assert (report / "report.md").exists()
    assert (report / "records.jsonl").exists()
    assert "learned" in out


def test_train_deterministic(capsys, tmp_path):
    data = tmp_path / "d.jsonl"
    run(
        capsys, "gen-dataset", "--domain", "visitall", "--samples", "12",
        "--instances", "3", "--seed", "2", "--set", "objects=4 6", "-o", str(data),
    )
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    args = ["train", "--dataset", str(data), "--k", "4", "--layers", "2",
            "--epochs", "2", "--batch-size", "4", "--seed", "9"]
    assert run(capsys, *args, "-o", str(m1))[0] == 0
    assert run(capsys, *args, "-o", str(m2))[0] == 0
    assert m1.read_bytes() == m2.read_bytes()


def test_selfcheck(capsys):
    code, out, _ = run(capsys, "selfcheck")
    assert code == 0
    assert "[PASS]" in out and "[FAIL]" not in out
