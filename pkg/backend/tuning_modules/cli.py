"""
Command-line entry point.

Every subcommand reads files, calls one pipeline stage and writes its
artifacts under --out, so partial pipelines can be resumed from disk.
Errors are reported as one `error: <ErrorClass>: <message>` line on stderr.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from config.settings import get_tuner_settings, load_tuner_settings, setup_logging

from .benchsuite import (
    CommandObjective,
    assemble_dataset,
    build_benchmark,
    generate_dataset,
    load_benchmark,
    load_plan,
    report,
    run_experiment,
    save_benchmark,
    synthetic_objective,
    synthetic_space,
    trajectory_path,
)
from .datastore import load_training_set, write_trajectory
from .errors import SessionError, TuningError
from .importance import compute_importance, load_report, ranking_stability, save_report, topk
from .models import ImportanceMethod, OptimizerKind, RunConfig, Sense
from .models.benchmark_models import SurrogateKind
from .optimize import tune
from .space import lhs_sample, load_space, random_sample, save_space, subspace
from .transfer import TransferContext, TransferMode, load_source_archive

# Setup logging
logger = logging.getLogger(__name__)


class UsageError(TuningError):
    """Invalid command-line arguments"""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.exit(2, f"error: {UsageError.__name__}: {message}\n")


def _csv_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _write_run_config(args: argparse.Namespace, **fields: Any) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run = RunConfig(command=args.command, out=str(out), overrides=get_tuner_settings().model_dump(), **fields)
    with open(out / "run_config.json", "w") as f:
        json.dump(run.model_dump(mode="json"), f, indent=2)


def cmd_space_validate(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    kinds: Dict[str, int] = {}
    for knob in space.knobs:
        kinds[knob.kind.value] = kinds.get(knob.kind.value, 0) + 1
    detail = ", ".join(f"{n} {kind}" for kind, n in sorted(kinds.items()))
    print(f"space '{space.name}': {len(space)} knobs ({detail})")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    if args.method == "lhs":
        configs = lhs_sample(space, args.n, args.seed)
    else:
        configs = random_sample(space, args.n, args.seed)
    path = Path(args.out) / "samples.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(configs, columns=space.names).to_csv(path, index=False)
    _write_run_config(args, space=args.space, seeds=[args.seed], method=args.method)
    print(path)
    return 0


def cmd_select_knobs(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    data = load_training_set(args.data, space, Sense(args.sense))
    result = compute_importance(args.method, data, args.seed)
    selected = topk(result, args.k)
    out = Path(args.out)
    save_report(result, out / f"importance_{result.method.value}.json")
    with open(out / "selected_knobs.json", "w") as f:
        json.dump(selected, f, indent=2)
    if args.stability:
        stability = ranking_stability(data, args.method, args.stability, args.k, args.seed)
        with open(out / f"stability_{result.method.value}.json", "w") as f:
            json.dump({str(size): iou for size, iou in stability.items()}, f, indent=2)
    _write_run_config(
        args, space=args.space, data=args.data, method=args.method, k=args.k, sense=args.sense, seeds=[args.seed]
    )
    print("\n".join(selected))
    return 0


def _tune_objective(args: argparse.Namespace):
    """Space, objective and sense of a tune invocation"""
    if args.benchmark:
        bench = load_benchmark(args.benchmark)
        sense = Sense(args.sense) if args.sense else bench.sense
        return bench.space, bench, sense
    if not args.space:
        raise UsageError("--space is required with --objective-cmd")
    if not args.sense:
        raise UsageError("--sense is required with --objective-cmd")
    return load_space(args.space), CommandObjective(args.objective_cmd, args.timeout), Sense(args.sense)


def cmd_tune(args: argparse.Namespace) -> int:
    space, objective, sense = _tune_objective(args)

    completion = None
    if args.knobs or args.select:
        if args.transfer:
            raise SessionError("transfer sessions tune the full space; drop --knobs/--select")
        if args.knobs:
            selected = args.knobs
        else:
            if not args.k:
                raise UsageError("--select needs --k")
            selected = topk(load_report(args.select), args.k)
        space, completion = subspace(space, selected)

    transfer = None
    label = OptimizerKind(args.optimizer).value
    if args.transfer:
        if not args.source_dir:
            raise UsageError("--transfer needs --source-dir")
        sources = load_source_archive(args.source_dir, space, sense)
        transfer = TransferContext(TransferMode(args.transfer), sources, target_profile=args.target_profile)
        label = f"{label}+{args.transfer}"

    session = tune(
        space, objective, args.optimizer, sense, args.budget, args.seed,
        n_init=args.n_init, completion=completion, transfer=transfer, progress=args.progress,
    )
    path = write_trajectory(session.history, space, trajectory_path(args.out, args.label or label, args.seed), completion)
    _write_run_config(
        args, space=args.space or args.benchmark, optimizer=args.optimizer, sense=sense.value,
        budget=args.budget, seeds=[args.seed], k=args.k,
    )
    print(path)
    return 0


def cmd_bench_build(args: argparse.Namespace) -> int:
    space = load_space(args.space)
    data = assemble_dataset(args.data, space, Sense(args.sense))
    provenance = {"space": space.name, "sources": [str(p) for p in args.data], "seed": args.seed}
    bench = build_benchmark(
        data, seed=args.seed, candidates=args.candidates, log_target=args.log_target, provenance=provenance
    )
    path = save_benchmark(bench, Path(args.out) / "benchmark.json")
    _write_run_config(args, space=args.space, data=args.data, sense=args.sense, seeds=[args.seed])
    print(f"{path} ({bench.kind.value}, default value {bench.default_value:g})")
    return 0


def cmd_bench_run(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan)
    if args.out_given:
        plan = plan.model_copy(update={"out_dir": args.out})
    args.out = plan.out_dir
    run_experiment(plan, jobs=args.jobs, progress=args.progress)
    bench = load_benchmark(plan.benchmark_path)
    summary = report(
        Path(plan.out_dir) / "trajectories", bench.space, bench.sense, plan.out_dir,
        default_value=bench.default_value, provenance=bench.provenance,
    )
    _write_run_config(
        args, optimizer=",".join(k.value for k in plan.optimizers), sense=bench.sense.value,
        budget=plan.budget, seeds=plan.seeds,
    )
    for name, rank in sorted(summary.ranking.mean_rank.items(), key=lambda item: (item[1], item[0])):
        print(f"{name}\t{rank:.2f}")
    return 0


def _transfer_pairs(pairs: Optional[Sequence[str]]) -> Dict[str, str]:
    result = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"--transfer-pair expects LABEL=BASELINE, got {pair!r}")
        label, baseline = pair.split("=", 1)
        result[label] = baseline
    return result


def cmd_report(args: argparse.Namespace) -> int:
    default_value, provenance = args.default_value, None
    if args.benchmark:
        bench = load_benchmark(args.benchmark)
        space, sense, provenance = bench.space, bench.sense, bench.provenance
        if default_value is None:
            default_value = bench.default_value
    else:
        if not (args.space and args.sense):
            raise UsageError("report needs --benchmark or both --space and --sense")
        space, sense = load_space(args.space), Sense(args.sense)
    trajectories = args.trajectories or str(Path(args.out) / "trajectories")
    summary = report(
        trajectories, space, sense, args.out,
        default_value=default_value, provenance=provenance, transfer_pairs=_transfer_pairs(args.transfer_pair),
    )
    _write_run_config(args, space=args.space or args.benchmark, data=[trajectories], sense=sense.value)
    for name, rank in sorted(summary.ranking.mean_rank.items(), key=lambda item: (item[1], item[0])):
        print(f"{name}\t{rank:.2f}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    space = synthetic_space(args.n_numeric, args.n_categorical, args.n_categories, name=args.name)
    save_space(space, out / "space.json")
    objective = synthetic_objective(space, args.seed, args.sense, heterogeneity=args.heterogeneity)
    runs = []
    for item in args.runs or []:
        kind, _, budget = item.partition(":")
        if not budget.isdigit() or kind not in {k.value for k in OptimizerKind}:
            raise UsageError(f"--runs expects OPTIMIZER:BUDGET, got {item!r}")
        runs.append((OptimizerKind(kind), int(budget)))
    written = generate_dataset(space, objective, args.n_lhs, out / "data", runs, seed=args.seed)
    with open(out / "optimum.json", "w") as f:
        json.dump({"config": objective.optimum_config, "value": objective.optimum_value}, f, indent=2)
    _write_run_config(args, space=str(out / "space.json"), data=[str(p) for p in written],
                      sense=Sense(args.sense).value, seeds=[args.seed])
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="Output directory (default: ./out)")
    common.add_argument("--settings", help="JSON file overriding algorithm settings")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--progress", action="store_true", help="Show progress bars")

    parser = _ArgumentParser(prog="knobtune", description="Database knob tuning toolkit")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = commands.add_parser("space-validate", parents=[common], help="Parse and check a space file")
    p.add_argument("--space", required=True)
    p.set_defaults(handler=cmd_space_validate)

    p = commands.add_parser("sample", parents=[common], help="Space-filling configuration samples")
    p.add_argument("--space", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["lhs", "random"], default="lhs")
    p.set_defaults(handler=cmd_sample)

    p = commands.add_parser("select-knobs", parents=[common], help="Rank knobs by importance and keep the top k")
    p.add_argument("--space", required=True)
    p.add_argument("--data", nargs="+", required=True, help="Training CSV file(s)")
    p.add_argument("--method", choices=[m.value for m in ImportanceMethod], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sense", choices=[s.value for s in Sense], default=Sense.MAXIMIZE.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stability", type=_int_list, help="Comma-separated sample sizes for top-k IoU stability")
    p.set_defaults(handler=cmd_select_knobs)

    p = commands.add_parser("tune", parents=[common], help="Run one tuning session")
    objective = p.add_mutually_exclusive_group(required=True)
    objective.add_argument("--objective-cmd", help="Command with a {config_path} placeholder")
    objective.add_argument("--benchmark", help="Benchmark JSON standing in for the system")
    p.add_argument("--space")
    p.add_argument("--optimizer", choices=[k.value for k in OptimizerKind], required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-init", type=int)
    p.add_argument("--sense", choices=[s.value for s in Sense])
    p.add_argument("--timeout", type=float, help="Seconds before an objective command counts as failed")
    selection = p.add_mutually_exclusive_group()
    selection.add_argument("--knobs", type=_csv_list, help="Comma-separated knobs to tune; others stay default")
    selection.add_argument("--select", help="Importance report whose top --k knobs are tuned")
    p.add_argument("--k", type=int)
    p.add_argument("--transfer", choices=[m.value for m in TransferMode])
    p.add_argument("--source-dir", help="Directory of source-task trajectories")
    p.add_argument("--target-profile", type=_float_list, help="Comma-separated internal metrics of the target workload")
    p.add_argument("--label", help="Trajectory label (default: optimizer[+transfer])")
    p.set_defaults(handler=cmd_tune)

    p = commands.add_parser("bench-build", parents=[common], help="Build a surrogate benchmark from data")
    p.add_argument("--space", required=True)
    p.add_argument("--data", nargs="+", required=True, help="LHS and trajectory CSV files")
    p.add_argument("--sense", choices=[s.value for s in Sense], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--candidates", type=_csv_list, help=f"Subset of {[k.value for k in SurrogateKind]}")
    p.add_argument("--log-target", action="store_true", help="Fit the surrogate on log performance")
    p.set_defaults(handler=cmd_bench_build)

    p = commands.add_parser("bench-run", parents=[common], help="Run an optimizer tournament plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(handler=cmd_bench_run)

    p = commands.add_parser("report", parents=[common], help="Summarize trajectories")
    p.add_argument("--trajectories", help="Trajectory directory (default: <out>/trajectories)")
    p.add_argument("--benchmark")
    p.add_argument("--space")
    p.add_argument("--sense", choices=[s.value for s in Sense])
    p.add_argument("--default-value", type=float)
    p.add_argument("--transfer-pair", action="append", help="LABEL=BASELINE, repeatable")
    p.set_defaults(handler=cmd_report)

    p = commands.add_parser("generate", parents=[common], help="Write a synthetic space and datasets")
    p.add_argument("--name", default="synthetic")
    p.add_argument("--n-numeric", type=int, default=8)
    p.add_argument("--n-categorical", type=int, default=2)
    p.add_argument("--n-categories", type=int, default=4)
    p.add_argument("--n-lhs", type=int, default=200)
    p.add_argument("--runs", type=_csv_list, help="Comma-separated OPTIMIZER:BUDGET trajectories")
    p.add_argument("--sense", choices=[s.value for s in Sense], default=Sense.MINIMIZE.value)
    p.add_argument("--heterogeneity", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_generate)
    return parser


def _one_line(error: BaseException) -> str:
    return " ".join(str(error).split())


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    args.out_given = args.out is not None
    args.out = args.out or "out"
    try:
        setup_logging(args.log_level)
        load_tuner_settings(args.settings)
        return args.handler(args)
    except (TuningError, ValidationError, OSError, json.JSONDecodeError) as e:
        print(f"error: {type(e).__name__}: {_one_line(e)}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.debug("Unexpected failure", exc_info=True)
        print(f"error: {type(e).__name__}: {_one_line(e)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
