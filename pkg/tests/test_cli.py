"""
Command-line pipeline: generate, build, tune, select and report from disk
"""
import json

import pandas as pd
import pytest

from backend.tuning_modules.cli import main
from config.settings import load_tuner_settings


@pytest.fixture(autouse=True)
def restore_settings():
    yield
    load_tuner_settings()


@pytest.fixture
def settings_file(tmp_path, small_settings):
    path = tmp_path / "settings.json"
    path.write_text(small_settings.model_dump_json())
    return path


@pytest.fixture
def generated(tmp_path, settings_file):
    out = tmp_path / "gen"
    code = main([
        "generate", "--n-numeric", "3", "--n-categorical", "1", "--n-lhs", "20", "--runs", "random:6",
        "--out", str(out), "--settings", str(settings_file),
    ])
    assert code == 0
    return out


@pytest.fixture
def benchmark(tmp_path, generated, settings_file):
    out = tmp_path / "bench"
    code = main([
        "bench-build", "--space", str(generated / "space.json"),
        "--data", str(generated / "data" / "lhs.csv"), str(generated / "data" / "random_seed0.csv"),
        "--sense", "minimize", "--candidates", "rf", "--out", str(out), "--settings", str(settings_file),
    ])
    assert code == 0
    return out / "benchmark.json"


def _last_line(text):
    return text.strip().splitlines()[-1]


def test_space_validate(space_file, capsys):
    assert main(["space-validate", "--space", str(space_file)]) == 0
    assert "space 'mixed': 3 knobs (1 categorical, 1 continuous, 1 integer)" in capsys.readouterr().out


def test_sample_writes_csv_and_run_config(tmp_path, space_file):
    out = tmp_path / "samples"
    assert main(["sample", "--space", str(space_file), "--n", "5", "--seed", "2", "--out", str(out)]) == 0
    frame = pd.read_csv(out / "samples.csv")
    assert list(frame.columns) == ["buffer_mb", "workers", "policy"]
    assert len(frame) == 5
    with open(out / "run_config.json") as f:
        run = json.load(f)
    assert (run["command"], run["seeds"], run["method"]) == ("sample", [2], "lhs")


def test_generate_outputs(generated):
    assert (generated / "space.json").exists()
    assert len(pd.read_csv(generated / "data" / "lhs.csv")) == 20
    assert len(pd.read_csv(generated / "data" / "random_seed0.csv")) == 6
    with open(generated / "optimum.json") as f:
        assert set(json.load(f)) == {"config", "value"}


def test_tune_against_benchmark(tmp_path, benchmark, settings_file, capsys):
    out = tmp_path / "tune"
    code = main([
        "tune", "--benchmark", str(benchmark), "--optimizer", "smac", "--budget", "6", "--seed", "1",
        "--out", str(out), "--settings", str(settings_file),
    ])
    assert code == 0
    path = out / "trajectories" / "smac_seed1.csv"
    assert _last_line(capsys.readouterr().out) == str(path)
    assert len(pd.read_csv(path)) == 6


def test_select_then_tune_subspace(tmp_path, generated, benchmark, settings_file):
    out = tmp_path / "select"
    code = main([
        "select-knobs", "--space", str(generated / "space.json"), "--data", str(generated / "data" / "lhs.csv"),
        "--method", "gini", "--k", "2", "--sense", "minimize", "--out", str(out), "--settings", str(settings_file),
    ])
    assert code == 0
    with open(out / "selected_knobs.json") as f:
        selected = json.load(f)
    assert len(selected) == 2
    assert (out / "importance_gini.json").exists()

    code = main([
        "tune", "--benchmark", str(benchmark), "--optimizer", "random", "--budget", "5",
        "--select", str(out / "importance_gini.json"), "--k", "2", "--out", str(out), "--settings", str(settings_file),
    ])
    assert code == 0
    frame = pd.read_csv(out / "trajectories" / "random_seed0.csv")
    assert {"x0", "x1", "x2", "c0"} <= set(frame.columns)


def test_bench_run_and_report(tmp_path, benchmark, settings_file, capsys):
    out = tmp_path / "tournament"
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({
        "benchmark_path": str(benchmark), "optimizers": ["random", "tpe"], "budget": 5, "seeds": [0, 1],
        "out_dir": str(out), "n_init": 4,
    }))
    assert main(["bench-run", "--plan", str(plan), "--settings", str(settings_file)]) == 0
    assert (out / "summary.json").exists()
    assert len(list((out / "trajectories").glob("*.csv"))) == 4

    capsys.readouterr()
    assert main(["report", "--benchmark", str(benchmark), "--out", str(out)]) == 0
    ranks = [line.split("\t") for line in capsys.readouterr().out.strip().splitlines()]
    assert sorted(name for name, _ in ranks) == ["random", "tpe"]


def test_unknown_flag_is_a_usage_error(space_file, capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["space-validate", "--space", str(space_file), "--verbose"])
    assert exit_info.value.code == 2
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1
    assert err.startswith("error: UsageError:")


def test_missing_file_exits_with_two(tmp_path, capsys):
    assert main(["space-validate", "--space", str(tmp_path / "missing.json")]) == 2
    assert _last_line(capsys.readouterr().err).startswith("error: ")


def test_bad_runs_argument(tmp_path, capsys):
    assert main(["generate", "--runs", "random", "--n-lhs", "4", "--out", str(tmp_path)]) == 2
    assert "UsageError" in _last_line(capsys.readouterr().err)


def test_objective_command_needs_sense(tmp_path, space_file, capsys):
    code = main([
        "tune", "--objective-cmd", "run {config_path}", "--space", str(space_file), "--optimizer", "random",
        "--budget", "3", "--out", str(tmp_path),
    ])
    assert code == 2
    assert "--sense" in _last_line(capsys.readouterr().err)
