"""
Knowledge transfer across tuning tasks: ranking-weighted GP ensembles (RGPE),
workload mapping and transfer quality metrics.

Every model here predicts the standardized, minimization-oriented objective of
its own task (see standardized_objective), so rankings are comparable across
tasks regardless of objective scale or sense.
"""
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import TunerSettings, get_tuner_settings

from ..datastore.tabular_store import read_trajectory
from ..errors import InsufficientDataError, TransferError
from ..models.history_models import History, Observation, Sense
from ..models.space_models import ConfigSpace, Configuration
from ..surrogate.adapters import ConfigSurrogate, Hypers, SurrogateFamily, fit_surrogate, standardized_objective

# Setup logging
logger = logging.getLogger(__name__)

NOT_SURPASSED = "×"


class TransferMode(str, Enum):
    MAPPING = "mapping"
    RGPE = "rgpe"


@dataclass(frozen=True)
class SourceTask:
    """A finished tuning task from the archive, before any model is fitted."""

    task_id: str
    history: History
    metrics_profile: Optional[np.ndarray] = None


@dataclass(frozen=True)
class BaseTask:
    """Source task with its surrogate M_i fitted on its own history only."""

    task_id: str
    history: History
    model: ConfigSurrogate
    metrics_profile: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EnsembleModel:
    """Weighted mixture of base surrogates and the target surrogate (last member)."""

    members: Tuple[ConfigSurrogate, ...]
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if len(weights) != len(self.members):
            raise TransferError(f"{len(weights)} weights for {len(self.members)} ensemble members")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise TransferError("ensemble weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", weights)

    def predict(self, configs: Sequence[Configuration]) -> Tuple[np.ndarray, np.ndarray]:
        mean = np.zeros(len(configs))
        var = np.zeros(len(configs))
        for member, w in zip(self.members, self.weights):
            if w == 0:
                continue
            m, v = member.predict(configs)
            mean += w * m
            var += w * v
        return mean, var


def build_base_task(
    task_id: str,
    history: History,
    space: ConfigSpace,
    family: SurrogateFamily = SurrogateFamily.GP_MIXED,
    seed: int = 0,
    profile: Optional[Sequence[float]] = None,
    settings: Optional[TunerSettings] = None,
) -> BaseTask:
    """Fit the base surrogate of a source task on that task's history"""
    if len(history) == 0:
        raise TransferError(f"source task '{task_id}' has no observations")
    model = fit_surrogate(
        family, space, history.configs(), standardized_objective(history.values(), history.sense), seed, settings
    )
    return BaseTask(
        task_id=task_id,
        history=history,
        model=model,
        metrics_profile=None if profile is None else np.asarray(profile, dtype=float),
    )


def misranked_pairs(predictions: np.ndarray, values: np.ndarray) -> int:
    """Σ_j Σ_k 1[(p_j ≤ p_k) xor (y_j ≤ y_k)] over all ordered pairs"""
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(values, dtype=float)
    return int(np.sum((p[:, None] <= p[None, :]) ^ (y[:, None] <= y[None, :])))


def ranking_loss(model: ConfigSurrogate, target_history: History) -> int:
    """Misranked pairs of a model's predictions against the target observations"""
    if len(target_history) < 2:
        raise InsufficientDataError("ranking loss needs at least 2 target observations")
    predictions, _ = model.predict(target_history.configs())
    return misranked_pairs(predictions, target_history.values() * target_history.sense.sign)


def rgpe_weights(
    bases: Sequence[BaseTask],
    target_history: History,
    target_model: ConfigSurrogate,
    samples: Optional[int] = None,
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
) -> np.ndarray:
    """
    Bootstrap estimate of P(member = argmin ranking loss). The target model is
    scored on its leave-one-out predictions; tied argmins split the credit.
    Returns weights for bases followed by the target.
    """
    settings = settings or get_tuner_settings()
    samples = settings.rgpe_samples if samples is None else int(samples)
    n = len(target_history)
    if n < 3:
        raise TransferError(f"RGPE weights need at least 3 target observations, got {n}")
    if not bases:
        return np.array([1.0])

    y = target_history.values() * target_history.sense.sign
    configs = target_history.configs()
    predictions = [base.model.predict(configs)[0] for base in bases]
    predictions.append(target_model.loo_predict()[0])
    P = np.vstack(predictions)

    rng = np.random.default_rng(seed)
    wins = np.zeros(len(P))
    for _ in range(samples):
        idx = rng.integers(0, n, size=n)
        losses = np.array([misranked_pairs(p[idx], y[idx]) for p in P])
        winners = np.flatnonzero(losses == losses.min())
        wins[winners] += 1.0 / len(winners)
    return wins / wins.sum()


def rgpe_predict(
    ensemble: EnsembleModel, configs: Union[Configuration, Sequence[Configuration]]
) -> Tuple[np.ndarray, np.ndarray]:
    """Σ w_i μ_i and Σ w_i σ_i² at the given configuration(s)"""
    if isinstance(configs, dict):
        mean, var = ensemble.predict([configs])
        return float(mean[0]), float(var[0])
    return ensemble.predict(list(configs))


def workload_map(target_profile: Sequence[float], sources: Sequence[BaseTask]) -> BaseTask:
    """Source task whose standardized metrics profile is closest to the target's"""
    if not sources:
        raise TransferError("workload mapping needs at least one source task")
    target = np.asarray(target_profile, dtype=float).ravel()
    profiles = []
    for source in sources:
        if source.metrics_profile is None:
            raise TransferError(f"source task '{source.task_id}' has no metrics profile")
        profile = np.asarray(source.metrics_profile, dtype=float).ravel()
        if profile.shape != target.shape:
            raise TransferError(
                f"source task '{source.task_id}' profile has {profile.size} metrics, target has {target.size}"
            )
        profiles.append(profile)

    stacked = np.vstack(profiles + [target])
    std = stacked.std(axis=0)
    keep = std > 0
    z = (stacked[:, keep] - stacked[:, keep].mean(axis=0)) / std[keep]
    distances = np.linalg.norm(z[:-1] - z[-1], axis=1)
    best = min(range(len(sources)), key=lambda i: (distances[i], sources[i].task_id))
    logger.info(f"Workload mapping selected source '{sources[best].task_id}' (distance {distances[best]:.3f})")
    return sources[best]


def transfer_pe(best_with: float, best_without: float) -> float:
    """Performance enhancement (best_with − best_without) / best_without"""
    if best_without == 0:
        raise TransferError("performance enhancement is undefined for a zero baseline")
    return (best_with - best_without) / best_without


def transfer_speedup(steps_base: int, steps_transfer: Optional[int]) -> Union[float, str]:
    """steps_base / steps_transfer, or NOT_SURPASSED when transfer never reached the baseline"""
    if steps_base < 1:
        raise TransferError(f"steps_base must be >= 1, got {steps_base}")
    if steps_transfer is None:
        return NOT_SURPASSED
    return steps_base / steps_transfer


def steps_to_reach(history: History, target_value: float) -> Optional[int]:
    """1-based number of evaluations until a successful value at least as good as target_value"""
    for i, record in enumerate(history):
        if record.ok and not history.sense.is_better(target_value, record.value):
            return i + 1
    return None


def steps_to_best(history: History) -> int:
    """1-based iteration at which the history's best value was first found"""
    ok = [r for r in history if r.ok]
    if not ok:
        raise InsufficientDataError("history has no successful observations")
    best = history.sense.best([r.value for r in ok])
    return steps_to_reach(history, best)


@dataclass
class TransferContext:
    """Transfer configuration attached to a tuning session."""

    mode: TransferMode
    sources: List[SourceTask]
    target_profile: Optional[np.ndarray] = None
    samples: Optional[int] = None
    _bases: Dict[SurrogateFamily, List[BaseTask]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.mode = TransferMode(self.mode)
        if not self.sources:
            raise TransferError("transfer needs at least one source task")

    def base_tasks(
        self, space: ConfigSpace, family: SurrogateFamily, seed: int, settings: Optional[TunerSettings] = None
    ) -> List[BaseTask]:
        """Base tasks for a surrogate family, fitted once and cached"""
        if family not in self._bases:
            self._bases[family] = [
                build_base_task(s.task_id, s.history, space, family, seed, s.metrics_profile, settings)
                for s in self.sources
            ]
            logger.info(f"Fitted {len(self.sources)} {family.value} base models for {self.mode.value} transfer")
        return self._bases[family]

    def _profile(self, target_history: History) -> Optional[np.ndarray]:
        if self.target_profile is not None:
            return np.asarray(self.target_profile, dtype=float)
        rows = [r.metrics for r in target_history if r.metrics is not None]
        return np.mean(np.asarray(rows, dtype=float), axis=0) if rows else None

    def surrogate(
        self,
        space: ConfigSpace,
        family: SurrogateFamily,
        target_history: History,
        configs: List[Configuration],
        y: np.ndarray,
        seed: int,
        settings: Optional[TunerSettings] = None,
        hypers: Optional[Hypers] = None,
    ) -> ConfigSurrogate:
        """Target surrogate augmented with source knowledge; y are the target's standardized scores"""
        bases = self.base_tasks(space, family, seed, settings)

        if self.mode == TransferMode.MAPPING:
            profile = self._profile(target_history)
            if profile is None:
                logger.warning("No target metrics profile yet; fitting the target data alone")
                return fit_surrogate(family, space, configs, y, seed, settings, hypers)
            mapped = workload_map(profile, bases)
            merged_configs = mapped.history.configs() + list(configs)
            merged_y = np.concatenate([
                standardized_objective(mapped.history.values(), mapped.history.sense), y,
            ])
            return fit_surrogate(family, space, merged_configs, merged_y, seed, settings, hypers)

        target = fit_surrogate(family, space, configs, y, seed, settings, hypers)
        if len(configs) < 3:
            return target
        scored = History(Sense.MINIMIZE)
        for record, value in zip(target_history, y):
            scored.append(Observation(record.config, float(value), record.status, record.iteration, record.metrics))
        weights = rgpe_weights(bases, scored, target, self.samples, seed, settings)
        logger.debug(f"RGPE weights: {np.round(weights, 3).tolist()}")
        return EnsembleModel(tuple(b.model for b in bases) + (target,), weights)


def load_source_archive(directory: Union[str, Path], space: ConfigSpace, sense: Sense) -> List[SourceTask]:
    """Read `<task_id>.csv` trajectories plus optional `<task_id>.json` metrics profiles"""
    directory = Path(directory)
    if not directory.is_dir():
        raise TransferError(f"source archive {directory} is not a directory")
    tasks: List[SourceTask] = []
    for csv_path in sorted(directory.glob("*.csv")):
        profile = None
        profile_path = csv_path.with_suffix(".json")
        if profile_path.exists():
            with open(profile_path, "r") as f:
                doc = json.load(f)
            profile = np.asarray(doc.get("metrics", []), dtype=float)
        tasks.append(SourceTask(task_id=csv_path.stem, history=read_trajectory(csv_path, space, sense),
                                metrics_profile=profile))
    if not tasks:
        raise TransferError(f"source archive {directory} contains no trajectory CSVs")
    logger.info(f"Loaded {len(tasks)} source tasks from {directory}")
    return tasks
