"""
Optimizer tournaments against a benchmark, rankings and summary reports
"""
import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy.stats import rankdata
from tqdm import tqdm

from config.settings import TunerSettings, get_tuner_settings

from ..datastore.tabular_store import PathLike, read_trajectory, write_trajectory
from ..errors import BenchmarkError, InsufficientDataError
from ..models.benchmark_models import (
    ExperimentPlan,
    OptimizerSummary,
    RankingTable,
    SummaryReport,
    TransferSummary,
)
from ..models.history_models import History, Sense
from ..models.space_models import ConfigSpace
from ..optimize.session_service import best_so_far, best_so_far_curve
from ..optimize.tune_service import tune
from ..transfer.transfer_service import steps_to_best, steps_to_reach, transfer_pe, transfer_speedup
from .benchmark_service import load_benchmark

# Setup logging
logger = logging.getLogger(__name__)

TRAJECTORY_PATTERN = re.compile(r"^(?P<label>.+)_seed(?P<seed>-?\d+)\.csv$")


def trajectory_path(out_dir: PathLike, label: str, seed: int) -> Path:
    return Path(out_dir) / "trajectories" / f"{label}_seed{seed}.csv"


def load_plan(path: PathLike) -> ExperimentPlan:
    try:
        with open(path) as f:
            return ExperimentPlan.model_validate(json.load(f))
    except (ValidationError, json.JSONDecodeError) as e:
        raise BenchmarkError(f"malformed experiment plan {path}: {e}") from e


def _run_session(
    benchmark_path: str,
    kind: str,
    seed: int,
    budget: int,
    n_init: Optional[int],
    out_dir: str,
    settings: TunerSettings,
) -> Tuple[str, int, str, float]:
    """One tournament session; a top-level function so worker processes can run it"""
    bench = load_benchmark(benchmark_path)
    session = tune(bench.space, bench, kind, bench.sense, budget, seed, n_init=n_init, settings=settings)
    path = write_trajectory(session.history, bench.space, trajectory_path(out_dir, kind, seed))
    _, best = best_so_far(session.history)
    return kind, seed, str(path), best


def run_experiment(
    plan: ExperimentPlan,
    jobs: int = 1,
    settings: Optional[TunerSettings] = None,
    progress: bool = True,
) -> Dict[Tuple[str, int], Path]:
    """
    Run every (optimizer, seed) session of the plan and write one trajectory
    CSV each. Sessions are independent, so the outputs do not depend on `jobs`.
    """
    settings = settings or get_tuner_settings()
    bench = load_benchmark(plan.benchmark_path)
    n_init = plan.n_init or settings.n_init
    if plan.budget < n_init:
        raise BenchmarkError(f"plan budget {plan.budget} is smaller than the initial design size {n_init}")

    tasks = [(kind.value, seed) for kind in plan.optimizers for seed in plan.seeds]
    logger.info(
        f"Running {len(tasks)} sessions ({len(plan.optimizers)} optimizers x {len(plan.seeds)} seeds, "
        f"budget {plan.budget}) on benchmark '{bench.space.name}' with {jobs} jobs"
    )
    results: Dict[Tuple[str, int], Path] = {}
    bar = tqdm(total=len(tasks), desc="Sessions", disable=not progress)
    if jobs <= 1:
        for kind, seed in tasks:
            _, _, path, best = _run_session(plan.benchmark_path, kind, seed, plan.budget, plan.n_init, plan.out_dir, settings)
            results[(kind, seed)] = Path(path)
            bar.update(1)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            future_to_task = {
                executor.submit(
                    _run_session, plan.benchmark_path, kind, seed, plan.budget, plan.n_init, plan.out_dir, settings
                ): (kind, seed)
                for kind, seed in tasks
            }
            for future in as_completed(future_to_task):
                kind, seed = future_to_task[future]
                _, _, path, best = future.result()
                results[(kind, seed)] = Path(path)
                bar.update(1)
                logger.debug(f"{kind} seed {seed}: best {best:g}")
    bar.close()
    return dict(sorted(results.items()))


def improvement_over_default(
    trajectory: Union[History, Sequence[float], float],
    default_value: float,
    sense: Union[Sense, str],
) -> float:
    """Percent improvement of the best value over the default"""
    sense = Sense(sense)
    if default_value == 0:
        raise BenchmarkError("improvement over a zero default is undefined")
    if isinstance(trajectory, History):
        _, best = best_so_far(trajectory)
    elif np.isscalar(trajectory):
        best = float(trajectory)
    else:
        best = sense.best(trajectory)
    if sense == Sense.MAXIMIZE:
        return (best - default_value) / default_value * 100.0
    return (default_value - best) / default_value * 100.0


def average_ranking(results: Mapping[str, Sequence[float]], sense: Union[Sense, str]) -> RankingTable:
    """
    Sort each optimizer's session bests best-first, rank the optimizers within
    every round (best sessions, then second best, ...) and average the ranks.
    Ties share the mean rank.
    """
    sense = Sense(sense)
    if not results:
        raise BenchmarkError("no optimizer results to rank")
    counts = {len(v) for v in results.values()}
    if len(counts) != 1 or 0 in counts:
        raise BenchmarkError(f"optimizers have unequal session counts: { {k: len(v) for k, v in results.items()} }")

    names = sorted(results)
    # minimization units: smaller is better
    ordered = np.array([np.sort(sense.sign * np.asarray(results[n], dtype=float)) for n in names])
    round_ranks: List[Dict[str, float]] = []
    for r in range(ordered.shape[1]):
        ranks = rankdata(ordered[:, r], method="average")
        round_ranks.append({n: float(rank) for n, rank in zip(names, ranks)})
    mean_rank = {n: float(np.mean([rr[n] for rr in round_ranks])) for n in names}
    quartiles = {n: [float(q) for q in np.percentile(results[n], [25, 50, 75])] for n in names}
    return RankingTable(mean_rank=mean_rank, round_ranks=round_ranks, quartiles=quartiles)


def collect_trajectories(directory: PathLike, space: ConfigSpace, sense: Union[Sense, str]) -> Dict[str, Dict[int, History]]:
    """Label -> seed -> History for every `<label>_seed<seed>.csv` under directory"""
    directory = Path(directory)
    runs: Dict[str, Dict[int, History]] = {}
    for path in sorted(directory.glob("*.csv")):
        match = TRAJECTORY_PATTERN.match(path.name)
        if not match:
            continue
        runs.setdefault(match["label"], {})[int(match["seed"])] = read_trajectory(path, space, Sense(sense))
    return runs


def best_so_far_quartiles(runs: Mapping[str, Mapping[int, History]]) -> pd.DataFrame:
    """Per optimizer and iteration: quartiles of the running best over seeds"""
    frames = []
    for label in sorted(runs):
        curves = [best_so_far_curve(h) for _, h in sorted(runs[label].items())]
        length = max(len(c) for c in curves)
        padded = np.vstack([np.pad(c, (0, length - len(c)), constant_values=c[-1] if len(c) else np.nan) for c in curves])
        q25, median, q75 = np.nanpercentile(padded, [25, 50, 75], axis=0)
        frames.append(pd.DataFrame({
            "optimizer": label,
            "iteration": np.arange(length),
            "q25": q25,
            "median": median,
            "q75": q75,
        }))
    return pd.concat(frames, ignore_index=True)


def _transfer_summary(
    runs: Mapping[str, Mapping[int, History]],
    label: str,
    baseline: str,
) -> TransferSummary:
    if label not in runs or baseline not in runs:
        raise BenchmarkError(f"transfer pair {label} vs {baseline} has no trajectories")
    pe: Dict[int, float] = {}
    speedup: Dict[int, object] = {}
    for seed in sorted(set(runs[label]) & set(runs[baseline])):
        with_transfer, without = runs[label][seed], runs[baseline][seed]
        _, best_with = best_so_far(with_transfer)
        _, best_without = best_so_far(without)
        pe[seed] = transfer_pe(best_with, best_without)
        speedup[seed] = transfer_speedup(steps_to_best(without), steps_to_reach(with_transfer, best_without))
    return TransferSummary(baseline=baseline, performance_enhancement=pe, speedup=speedup)


def report(
    trajectory_dir: PathLike,
    space: ConfigSpace,
    sense: Union[Sense, str],
    out_dir: PathLike,
    default_value: Optional[float] = None,
    provenance: Optional[Dict] = None,
    transfer_pairs: Optional[Mapping[str, str]] = None,
) -> SummaryReport:
    """
    Write `summary.json` (bests, improvements, ranks, quartiles, transfer
    metrics) and `best_so_far.csv` (quartiles over seeds per iteration).
    """
    sense = Sense(sense)
    runs = collect_trajectories(trajectory_dir, space, sense)
    if not runs:
        raise BenchmarkError(f"no trajectory files in {trajectory_dir}")

    session_bests: Dict[str, List[float]] = {}
    for label, by_seed in runs.items():
        bests = []
        for seed, history in sorted(by_seed.items()):
            try:
                bests.append(best_so_far(history)[1])
            except InsufficientDataError:
                bests.append(sense.worst([np.inf, -np.inf]))
                logger.warning(f"{label} seed {seed} has no successful evaluation")
        session_bests[label] = bests
    table = average_ranking(session_bests, sense)

    optimizers = {}
    for label, bests in sorted(session_bests.items()):
        improvement = None
        if default_value is not None and default_value != 0:
            improvement = improvement_over_default(sense.best(bests), default_value, sense)
        optimizers[label] = OptimizerSummary(
            best_value=sense.best(bests),
            session_bests=bests,
            improvement_percent=improvement,
            mean_rank=table.mean_rank[label],
        )
    transfer = {label: _transfer_summary(runs, label, base) for label, base in (transfer_pairs or {}).items()}

    summary = SummaryReport(
        benchmark=provenance or {},
        sense=sense,
        default_value=default_value,
        budget=max(len(h) for by_seed in runs.values() for h in by_seed.values()),
        optimizers=optimizers,
        ranking=table,
        transfer=transfer,
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "summary.json", "w") as f:
        json.dump(summary.model_dump(mode="json"), f, indent=2)
    best_so_far_quartiles(runs).to_csv(out_dir / "best_so_far.csv", index=False)
    logger.info(f"Report for {len(runs)} optimizers written to {out_dir}")
    return summary
