"""
Surrogate benchmarks, optimizer tournaments and external objectives
"""
import json
import sys
import time

import numpy as np
import pandas as pd
import pytest

from backend.tuning_modules.benchsuite import (
    CommandObjective,
    assemble_dataset,
    average_ranking,
    bench_evaluate,
    build_benchmark,
    generate_dataset,
    improvement_over_default,
    load_benchmark,
    model_select,
    parse_objective_output,
    report,
    run_experiment,
    save_benchmark,
    synthetic_objective,
    synthetic_space,
    trajectory_path,
)
from backend.tuning_modules.benchsuite import benchmark_service
from backend.tuning_modules.errors import BenchmarkError, InsufficientDataError, ObjectiveError, SpaceError
from backend.tuning_modules.models import ExperimentPlan, Sense, Status, SurrogateKind, TrainingSet
from backend.tuning_modules.optimize import tune
from backend.tuning_modules.space import lhs_sample, random_sample
from backend.tuning_modules.surrogate import rf_fit


def _objective(config):
    penalty = {"a": 1.0, "b": 0.0, "c": 2.0}[config["policy"]]
    return (config["buffer_mb"] - 7.0) ** 2 / 10.0 + abs(config["workers"] - 2) + penalty


def _training_set(space, f, n, seed=0, sense=Sense.MINIMIZE):
    configs = lhs_sample(space, n, seed)
    return TrainingSet(space, configs, np.array([f(c) for c in configs], dtype=float), sense)


@pytest.fixture
def benchmark_file(tmp_path, mixed_space, small_settings):
    bench = build_benchmark(_training_set(mixed_space, _objective, 30), seed=0, settings=small_settings)
    return save_benchmark(bench, tmp_path / "bench.json")


# Report metrics

def test_improvement_over_default_examples():
    assert improvement_over_default(120.0, 100.0, "maximize") == pytest.approx(20.0)
    assert improvement_over_default([180.0, 150.0], 200.0, Sense.MINIMIZE) == pytest.approx(25.0)
    assert improvement_over_default(100.0, 100.0, "maximize") == 0.0
    with pytest.raises(BenchmarkError):
        improvement_over_default(1.0, 0.0, "minimize")


def test_average_ranking_examples():
    table = average_ranking({"A": [1.0, 2.0, 3.0], "B": [4.0, 5.0, 6.0]}, "minimize")
    assert table.mean_rank == {"A": 1.0, "B": 2.0}
    tied = average_ranking({"A": [1.0, 2.0], "B": [2.0, 1.0]}, "maximize")
    assert tied.mean_rank == {"A": 1.5, "B": 1.5}
    assert tied.quartiles["A"][1] == pytest.approx(1.5)


def test_average_ranking_sorts_sessions_per_optimizer():
    # A's best session beats B's best, but A's worst loses to B's worst
    table = average_ranking({"A": [10.0, 1.0], "B": [5.0, 2.0]}, "maximize")
    assert table.round_ranks == [{"A": 1.0, "B": 2.0}, {"A": 2.0, "B": 1.0}]
    assert table.mean_rank == {"A": 1.5, "B": 1.5}


def test_average_ranking_rejects_ragged_input():
    with pytest.raises(BenchmarkError):
        average_ranking({"A": [1.0, 2.0], "B": [1.0]}, "minimize")
    with pytest.raises(BenchmarkError):
        average_ranking({}, "minimize")


# Dataset assembly and model selection

def test_assemble_dataset_drops_duplicates_and_failures(tmp_path, mixed_space):
    rows = [
        {"buffer_mb": 1.0, "workers": 2, "policy": "a", "performance": 3.0, "status": "ok"},
        {"buffer_mb": 2.0, "workers": 3, "policy": "b", "performance": 4.0, "status": "failed"},
    ]
    pd.DataFrame(rows).to_csv(tmp_path / "lhs.csv", index=False)
    more = [
        {"buffer_mb": 1.0, "workers": 2, "policy": "a", "performance": 9.0, "status": "ok"},
        {"buffer_mb": 5.0, "workers": 1, "policy": "c", "performance": 1.0, "status": "ok"},
    ]
    pd.DataFrame(more).to_csv(tmp_path / "run.csv", index=False)

    data = assemble_dataset([tmp_path / "lhs.csv", tmp_path / "run.csv"], mixed_space, "minimize")
    assert len(data) == 2
    assert data.values.tolist() == [3.0, 1.0]
    assert data.sense == Sense.MINIMIZE


def test_ridge_fits_linear_data(numeric_space, small_settings):
    settings = small_settings.model_copy(update={"cv_search_draws": 20})
    data = _training_set(numeric_space, lambda c: 3.0 * c["x0"] - 2.0 * c["x1"] + 1.0, 200)
    result = model_select(data, candidates=["ridge"], folds=5, seed=0, settings=settings)
    assert result.winner == SurrogateKind.RIDGE
    assert result.score_of("ridge").r2 >= 0.99


def test_model_select_is_deterministic(mixed_space, small_settings):
    data = _training_set(mixed_space, _objective, 24)
    first = model_select(data, seed=3, settings=small_settings)
    second = model_select(data, seed=3, settings=small_settings)
    assert first == second
    assert [c.kind for c in first.candidates] == [SurrogateKind.RF, SurrogateKind.KNN, SurrogateKind.RIDGE]


def test_model_select_needs_enough_samples(mixed_space, small_settings):
    data = _training_set(mixed_space, _objective, 2)
    with pytest.raises(InsufficientDataError):
        model_select(data, settings=small_settings)


# Benchmarks

def test_constant_benchmark(mixed_space, small_settings):
    bench = build_benchmark(_training_set(mixed_space, lambda c: 7.0, 12), settings=small_settings)
    assert bench.default_value == pytest.approx(7.0)
    for config in random_sample(mixed_space, 10, seed=0):
        assert bench_evaluate(bench, config) == pytest.approx(7.0)


def test_benchmark_round_trip(tmp_path, mixed_space, small_settings):
    bench = build_benchmark(_training_set(mixed_space, _objective, 30), seed=1, settings=small_settings)
    loaded = load_benchmark(save_benchmark(bench, tmp_path / "b" / "bench.json"))
    configs = random_sample(mixed_space, 100, seed=2)
    assert np.array_equal(bench.predict(configs), loaded.predict(configs))
    assert loaded.default_value == bench.default_value
    assert loaded.kind == bench.kind
    assert loaded.provenance["n_samples"] == 30


def test_benchmark_evaluation_is_pure(mixed_space, small_settings):
    bench = build_benchmark(_training_set(mixed_space, _objective, 20), settings=small_settings)
    config = {"buffer_mb": 4.2, "workers": 3, "policy": "c"}
    assert bench(config) == bench(config) == bench_evaluate(bench, config)
    with pytest.raises(SpaceError):
        bench_evaluate(bench, {"buffer_mb": 4.2, "workers": 3, "policy": "z"})


def test_malformed_benchmark_file(tmp_path):
    path = tmp_path / "bench.json"
    path.write_text('{"space": {}}')
    with pytest.raises(BenchmarkError):
        load_benchmark(path)


def test_maximize_benchmark_drives_a_session(mixed_space, small_settings):
    data = _training_set(mixed_space, lambda c: 100.0 - _objective(c), 20, sense=Sense.MAXIMIZE)
    bench = build_benchmark(data, settings=small_settings)
    session = tune(bench.space, bench, "smac", bench.sense, budget=6, seed=0, settings=small_settings)
    assert session.sense == Sense.MAXIMIZE
    assert all(r.status == Status.OK for r in session.history)


# Tournaments

def _plan(benchmark_file, out_dir):
    return ExperimentPlan(
        benchmark_path=str(benchmark_file),
        optimizers=["random", "smac"],
        budget=5,
        seeds=[0, 1],
        out_dir=str(out_dir),
        n_init=4,
    )


def test_run_experiment_writes_one_trajectory_per_session(tmp_path, benchmark_file, small_settings):
    outputs = run_experiment(_plan(benchmark_file, tmp_path / "a"), settings=small_settings, progress=False)
    assert sorted(outputs) == [("random", 0), ("random", 1), ("smac", 0), ("smac", 1)]
    for path in outputs.values():
        frame = pd.read_csv(path)
        assert len(frame) == 5
        assert set(frame["status"]) == {"ok"}


@pytest.mark.slow
def test_run_experiment_is_schedule_invariant(tmp_path, benchmark_file, small_settings):
    run_experiment(_plan(benchmark_file, tmp_path / "serial"), jobs=1, settings=small_settings, progress=False)
    run_experiment(_plan(benchmark_file, tmp_path / "parallel"), jobs=2, settings=small_settings, progress=False)
    for kind in ("random", "smac"):
        for seed in (0, 1):
            serial = trajectory_path(tmp_path / "serial", kind, seed).read_bytes()
            assert serial == trajectory_path(tmp_path / "parallel", kind, seed).read_bytes()


def test_plan_budget_below_initial_design(tmp_path, benchmark_file, small_settings):
    plan = _plan(benchmark_file, tmp_path).model_copy(update={"budget": 2})
    with pytest.raises(BenchmarkError):
        run_experiment(plan, settings=small_settings, progress=False)


def test_report_artifacts(tmp_path, benchmark_file, small_settings):
    run_experiment(_plan(benchmark_file, tmp_path), settings=small_settings, progress=False)
    bench = load_benchmark(benchmark_file)
    summary = report(
        tmp_path / "trajectories", bench.space, bench.sense, tmp_path / "report",
        default_value=bench.default_value, provenance={"name": "mixed"}, transfer_pairs={"smac": "random"},
    )
    assert set(summary.optimizers) == {"random", "smac"}
    assert summary.budget == 5
    assert all(1.0 <= s.mean_rank <= 2.0 for s in summary.optimizers.values())
    assert set(summary.transfer["smac"].performance_enhancement) == {0, 1}

    with open(tmp_path / "report" / "summary.json") as f:
        assert json.load(f)["benchmark"] == {"name": "mixed"}
    curves = pd.read_csv(tmp_path / "report" / "best_so_far.csv")
    assert list(curves.columns) == ["optimizer", "iteration", "q25", "median", "q75"]
    assert len(curves) == 10
    assert (curves["q25"] <= curves["q75"]).all()


def test_report_without_trajectories(tmp_path, mixed_space):
    with pytest.raises(BenchmarkError):
        report(tmp_path, mixed_space, "minimize", tmp_path / "out")


# External objectives

def test_parse_objective_output():
    assert parse_objective_output("warming up\n42.0\n") == (42.0, None)
    assert parse_objective_output("metrics: 1, 2.5\n3.5\n") == (3.5, (1.0, 2.5))
    for bad in ("", "hello", "nan", "metrics: x\n1"):
        with pytest.raises(ObjectiveError):
            parse_objective_output(bad)


def _command(tmp_path, body, timeout=None):
    script = tmp_path / "objective.py"
    script.write_text("import json, sys, time\nconfig = json.load(open(sys.argv[1]))\n" + body)
    return CommandObjective(f'"{sys.executable}" "{script}" {{config_path}}', timeout=timeout)


def test_command_objective_reads_the_configuration(tmp_path):
    objective = _command(tmp_path, "print('metrics: 1 2')\nprint(config['workers'] * 21.0)\n")
    result = objective({"workers": 2})
    assert (result.value, result.status, result.metrics) == (42.0, Status.OK, (1.0, 2.0))


@pytest.mark.parametrize("body,timeout", [
    ("print('not a number')\n", None),
    ("sys.exit(3)\n", None),
    ("time.sleep(10)\nprint(1.0)\n", 0.5),
])
def test_command_failures_become_failed_observations(tmp_path, body, timeout):
    result = _command(tmp_path, body, timeout)({"workers": 1})
    assert result.status == Status.FAILED
    assert result.message


def test_command_needs_placeholder():
    with pytest.raises(ObjectiveError):
        CommandObjective("run-benchmark --fast")


# Synthetic benchmarks

@pytest.mark.parametrize("sense", ["minimize", "maximize"])
def test_synthetic_optimum(sense):
    space = synthetic_space(n_numeric=4, n_categorical=2)
    objective = synthetic_objective(space, seed=3, sense=sense, heterogeneity=True)
    values = [objective(c) for c in random_sample(space, 200, seed=0)]
    best = objective.optimum_value
    if sense == "minimize":
        assert best <= min(values)
    else:
        assert best >= max(values)


def test_generate_dataset_feeds_a_benchmark(tmp_path, small_settings):
    space = synthetic_space(n_numeric=3, n_categorical=1)
    objective = synthetic_objective(space, seed=0)
    written = generate_dataset(space, objective, 12, tmp_path, optimizer_runs=[("random", 6)],
                               settings=small_settings)
    assert [p.name for p in written] == ["lhs.csv", "random_seed0.csv"]
    assert list(pd.read_csv(written[0]).columns) == [*space.names, "performance", "status"]
    data = assemble_dataset(written, space, objective.sense)
    assert 12 <= len(data) <= 18
    bench = build_benchmark(data, settings=small_settings)
    assert bench.space == space


def test_forest_refit_matches_the_cross_validated_forest(monkeypatch, mixed_space, small_settings):
    fitted = []

    def recording_fit(X, y, params, categorical):
        fitted.append(params)
        return rf_fit(X, y, params, categorical)

    monkeypatch.setattr(benchmark_service, "rf_fit", recording_fit)
    settings = small_settings.model_copy(update={"forest_bootstrap": False})
    bench = build_benchmark(_training_set(mixed_space, _objective, 24), seed=0, candidates=["rf"], settings=settings)

    cross_validated, refit = fitted[:-1], fitted[-1]
    assert len(cross_validated) == settings.cv_folds * settings.cv_search_draws
    assert all(not params.bootstrap for params in fitted)
    assert refit in cross_validated
    assert bench.kind == SurrogateKind.RF


@pytest.mark.slow
def test_benchmark_evaluation_stays_under_ten_milliseconds(mixed_space, small_settings):
    bench = build_benchmark(_training_set(mixed_space, _objective, 40), seed=0, settings=small_settings)
    configs = random_sample(mixed_space, 200, seed=3)
    start = time.perf_counter()
    for config in configs:
        bench_evaluate(bench, config)
    assert (time.perf_counter() - start) / len(configs) < 0.01


@pytest.mark.slow
def test_model_based_optimizers_beat_random_on_the_heterogeneous_function(small_settings):
    space = synthetic_space(n_numeric=16, n_categorical=4)
    objective = synthetic_objective(space, seed=0, heterogeneity=True)

    def median_best(kind):
        best = []
        for seed in range(11):
            session = tune(space, objective, kind, objective.sense, budget=100, seed=seed, settings=small_settings)
            best.append(session.sense.best(session.history.ok_values()))
        return float(np.median(best))

    medians = {kind: median_best(kind) for kind in ["random", "smac", "mixed_bo", "onehot_bo", "vanilla_bo"]}
    assert medians["smac"] < medians["random"]
    assert medians["mixed_bo"] < medians["random"]
    assert medians["mixed_bo"] <= medians["onehot_bo"] <= medians["vanilla_bo"]
