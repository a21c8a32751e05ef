"""End-to-end command-line behavior, driven in-process through main()."""

import json

import pytest

from maxsum_dcop import (
    CSV_COLUMNS,
    GenConfig,
    load_problem,
    save_problem,
    validate_problem,
)
from maxsum_dcop.cli import main

from conftest import make_problem


@pytest.fixture
def gen_config_path(tmp_path):
    cfg = GenConfig(
        num_functions=4,
        min_arity=2,
        max_arity=3,
        domain_size_range=(2, 3),
        cost_range=(0, 30),
        var_t=0.5,
        seed=11,
    )
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def test_generate_writes_valid_problem(tmp_path, capsys, gen_config_path):
    out = tmp_path / "problem.json"
    code, captured = _run(
        capsys, ["generate", "--config", str(gen_config_path), "--out", str(out)]
    )
    assert code == 0
    report = json.loads(captured.out)
    assert report["functions"] == 4
    assert 0.0 <= report["measured_var_tightness"] < 1.0
    problem = load_problem(out)
    assert validate_problem(problem) == []


def test_generate_same_seed_same_bytes(tmp_path, capsys, gen_config_path):
    out1, out2 = tmp_path / "p1.json", tmp_path / "p2.json"
    for out in (out1, out2):
        code, _ = _run(
            capsys,
            ["generate", "--config", str(gen_config_path), "--out", str(out)],
        )
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_generate_seed_override_changes_instance(tmp_path, capsys, gen_config_path):
    out1, out2 = tmp_path / "p1.json", tmp_path / "p2.json"
    _run(capsys, ["generate", "--config", str(gen_config_path), "--out", str(out1)])
    code, _ = _run(
        capsys,
        [
            "generate", "--config", str(gen_config_path),
            "--out", str(out2), "--seed", "999",
        ],
    )
    assert code == 0
    assert out1.read_bytes() != out2.read_bytes()


def test_generate_missing_config_exits_2(tmp_path, capsys):
    code, captured = _run(
        capsys,
        ["generate", "--config", str(tmp_path / "nope.json"),
         "--out", str(tmp_path / "p.json")],
    )
    assert code == 2
    assert "file not found" in captured.err


def test_generate_bad_config_exits_2(tmp_path, capsys):
    path = tmp_path / "gen.json"
    path.write_text(json.dumps({"num_functions": 2}))
    code, captured = _run(
        capsys,
        ["generate", "--config", str(path), "--out", str(tmp_path / "p.json")],
    )
    assert code == 2
    assert "bad config" in captured.err


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_unary_problem(tmp_path, capsys):
    problem = make_problem([((0,), [5, 7])], domain_size=2)
    path = tmp_path / "unary.json"
    save_problem(problem, path)
    code, captured = _run(
        capsys, ["solve", "--problem", str(path), "--iters", "2"]
    )
    assert code == 0
    doc = json.loads(captured.out)
    assert doc["best_assignment"] == {"0": 1}
    assert doc["best_global_utility"] == 7.0
    assert doc["stats"]["total_leaves"] > 0


def test_solve_backends_and_kernel_paths_agree(tmp_path, capsys, gen_config_path):
    problem_path = tmp_path / "p.json"
    _run(
        capsys,
        ["generate", "--config", str(gen_config_path), "--out", str(problem_path)],
    )
    best = {}
    for argv_extra in (
        ["--backend", "naive"],
        ["--backend", "fdsp"],
        ["--backend", "gdp"],
        ["--backend", "fdsp", "--no-numba"],
    ):
        code, captured = _run(
            capsys,
            ["solve", "--problem", str(problem_path), "--iters", "5"] + argv_extra,
        )
        assert code == 0
        doc = json.loads(captured.out)
        best[tuple(argv_extra)] = doc["best_global_utility"]
    assert len(set(best.values())) == 1


def test_solve_missing_problem_exits_2(tmp_path, capsys):
    code, captured = _run(
        capsys, ["solve", "--problem", str(tmp_path / "absent.json")]
    )
    assert code == 2
    assert "file not found" in captured.err


def test_solve_invalid_problem_reports_violations(tmp_path, capsys):
    problem = make_problem([((0, 1), [1, 2, 3, 4])], domain_size=2)
    path = tmp_path / "broken.json"
    save_problem(problem, path)
    doc = json.loads(path.read_text())
    doc["functions"][0]["scope"] = [0, 99]
    path.write_text(json.dumps(doc))
    code, captured = _run(capsys, ["solve", "--problem", str(path)])
    assert code == 2
    assert "invalid problem" in captured.err
    assert "99" in captured.err


def test_solve_garbage_json_exits_2(tmp_path, capsys):
    path = tmp_path / "garbage.json"
    path.write_text("{not json")
    code, captured = _run(capsys, ["solve", "--problem", str(path)])
    assert code == 2
    assert "not valid JSON" in captured.err


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@pytest.fixture
def sweep_config_path(tmp_path, gen_config_path):
    doc = {
        "name": "cli",
        "base": json.loads(gen_config_path.read_text()),
        "axis": {"param": "var_t", "values": [0.3, 0.6]},
        "instances": 1,
        "iterations": 2,
        "backends": ["fdsp", "gdp"],
        "seed": 5,
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(doc))
    return path


def test_sweep_writes_csv_with_exact_header(tmp_path, capsys, sweep_config_path):
    out = tmp_path / "rows.csv"
    code, captured = _run(
        capsys, ["sweep", "--config", str(sweep_config_path), "--out", str(out)]
    )
    assert code == 0
    report = json.loads(captured.out)
    assert report["rows_written"] == 4
    assert report["skips"] == []
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 5


def test_sweep_appends_on_second_run(tmp_path, capsys, sweep_config_path):
    out = tmp_path / "rows.csv"
    for _ in range(2):
        code, _ = _run(
            capsys,
            ["sweep", "--config", str(sweep_config_path), "--out", str(out)],
        )
        assert code == 0
    lines = out.read_text().splitlines()
    assert lines.count(",".join(CSV_COLUMNS)) == 1
    assert len(lines) == 9


def test_sweep_seed_override_changes_rows(tmp_path, capsys, sweep_config_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    _run(capsys, ["sweep", "--config", str(sweep_config_path), "--out", str(out1)])
    code, _ = _run(
        capsys,
        ["sweep", "--config", str(sweep_config_path), "--out", str(out2),
         "--seed", "12345"],
    )
    assert code == 0
    seeds1 = [line.split(",")[2] for line in out1.read_text().splitlines()[1:]]
    seeds2 = [line.split(",")[2] for line in out2.read_text().splitlines()[1:]]
    assert seeds1 != seeds2


# ---------------------------------------------------------------------------
# kernel-bench
# ---------------------------------------------------------------------------

def test_kernel_bench_reports_both_paths(capsys):
    code, captured = _run(
        capsys,
        ["kernel-bench", "--num-functions", "3", "--max-arity", "2",
         "--domain", "2", "--iters", "2"],
    )
    assert code == 0
    report = json.loads(captured.out)
    modes = {(r["backend"], r["mode"]) for r in report["runs"]}
    assert ("fdsp", "python") in modes
    assert ("gdp", "python") in modes
    if report["numba_available"]:
        assert ("fdsp", "numba") in modes
        assert set(report["speedup"]) == {"fdsp", "gdp"}
