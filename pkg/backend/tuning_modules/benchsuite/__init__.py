"""Surrogate benchmark suite exports"""
from .benchmark_service import (
    TuningBenchmark,
    assemble_dataset,
    bench_evaluate,
    build_benchmark,
    load_benchmark,
    model_select,
    save_benchmark,
)
from .experiment_service import (
    average_ranking,
    best_so_far_quartiles,
    collect_trajectories,
    improvement_over_default,
    load_plan,
    report,
    run_experiment,
    trajectory_path,
)
from .external_objective import CommandObjective, external_objective, parse_objective_output
from .synthetic import (
    SyntheticObjective,
    additive_importance_dataset,
    generate_dataset,
    synthetic_objective,
    synthetic_space,
)

__all__ = [
    "CommandObjective",
    "SyntheticObjective",
    "TuningBenchmark",
    "additive_importance_dataset",
    "assemble_dataset",
    "average_ranking",
    "bench_evaluate",
    "best_so_far_quartiles",
    "build_benchmark",
    "collect_trajectories",
    "external_objective",
    "generate_dataset",
    "improvement_over_default",
    "load_benchmark",
    "load_plan",
    "model_select",
    "parse_objective_output",
    "report",
    "run_experiment",
    "save_benchmark",
    "synthetic_objective",
    "synthetic_space",
    "trajectory_path",
]
