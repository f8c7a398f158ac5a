"""
Knob-importance measurements, rankings and knob-selection schedules
"""
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Union

import numpy as np
from pydantic import ValidationError
from sklearn.linear_model import lasso_path
from sklearn.preprocessing import PolynomialFeatures, StandardScaler

from config.settings import TunerSettings, get_tuner_settings

from ..errors import InsufficientDataError, SpaceError, TuningError
from ..models.importance_models import ImportanceMethod, ImportanceReport, TrainingSet
from ..models.space_models import EncodingScheme
from ..space.space_service import encode, encode_matrix, get_layout
from ..surrogate.forest_service import ForestModel, ForestParams, per_tree_predictions, rf_fit, split_counts
from .fanova import fanova_fractions

# Setup logging
logger = logging.getLogger(__name__)


class ScheduleKind(str, Enum):
    """Incremental knob-selection schedules"""
    INCREASE = "increase"
    DECREASE = "decrease"


def _require_points(data: TrainingSet, minimum: int = 2) -> None:
    if len(data) < minimum:
        raise InsufficientDataError(f"importance needs at least {minimum} observations, got {len(data)}")


def _uniform(data: TrainingSet, method: ImportanceMethod, reason: str) -> ImportanceReport:
    logger.warning(f"{method.value} importance: {reason}; using uniform scores")
    m = len(data.space)
    return ImportanceReport.from_scores(method, {name: 1.0 / m for name in data.space.names})


def _is_constant(values: np.ndarray) -> bool:
    return float(np.ptp(values)) <= 1e-12 * max(1.0, float(np.max(np.abs(values))))


def _fit_forest(data: TrainingSet, seed: int, settings: TunerSettings) -> ForestModel:
    params = ForestParams.from_settings(
        settings,
        seed=seed,
        n_trees=settings.importance_trees,
        min_samples_leaf=settings.importance_min_samples_leaf,
    )
    layout = get_layout(data.space, EncodingScheme.RAW)
    X = encode_matrix(data.configs, data.space, EncodingScheme.RAW)
    return rf_fit(X, data.values, params, categorical=layout.categorical)


def _predict(forest: ForestModel, X: np.ndarray) -> np.ndarray:
    return per_tree_predictions(forest, X).mean(axis=1)


def gini_importance(data: TrainingSet, seed: int = 0, settings: Optional[TunerSettings] = None) -> ImportanceReport:
    """Share of tree splits made on each knob across the forest"""
    settings = settings or get_tuner_settings()
    _require_points(data)
    if _is_constant(data.values):
        return _uniform(data, ImportanceMethod.GINI, "constant performance")
    counts = split_counts(_fit_forest(data, seed, settings)).astype(float)
    if counts.sum() == 0:
        return _uniform(data, ImportanceMethod.GINI, "forest made no splits")
    scores = counts / counts.sum()
    return ImportanceReport.from_scores(ImportanceMethod.GINI, dict(zip(data.space.names, scores)))


def lasso_importance(
    data: TrainingSet,
    lambda_path: Optional[Sequence[float]] = None,
    settings: Optional[TunerSettings] = None,
) -> ImportanceReport:
    """
    Rank knobs by the order in which their degree-two polynomial terms enter
    the Lasso path. Score is (n_alphas - first activation index) / n_alphas,
    zero for knobs that never activate.
    """
    settings = settings or get_tuner_settings()
    _require_points(data)
    if _is_constant(data.values):
        return _uniform(data, ImportanceMethod.LASSO, "constant performance")

    layout = get_layout(data.space, EncodingScheme.UNIT_ONEHOT)
    X = encode_matrix(data.configs, data.space, EncodingScheme.UNIT_ONEHOT)
    poly = PolynomialFeatures(degree=2, include_bias=False).fit(X)
    Z = StandardScaler().fit_transform(poly.transform(X))
    y = data.values - data.values.mean()

    if lambda_path is not None:
        alphas = np.sort(np.asarray(lambda_path, dtype=float))[::-1]
        _, coefs, _ = lasso_path(Z, y, alphas=alphas)
    else:
        alphas, coefs, _ = lasso_path(Z, y, n_alphas=settings.lasso_alphas)
    n_alphas = len(alphas)

    active = np.abs(coefs) > 1e-12
    first = np.where(active.any(axis=1), np.argmax(active, axis=1), n_alphas)
    knob_of_column = np.empty(layout.width, dtype=int)
    for i, (_, start, stop) in enumerate(layout.spans):
        knob_of_column[start:stop] = i

    earliest = np.full(len(data.space), n_alphas)
    for term, powers in enumerate(poly.powers_):
        for knob in set(knob_of_column[np.nonzero(powers)[0]]):
            earliest[knob] = min(earliest[knob], first[term])
    if np.all(earliest >= n_alphas):
        return _uniform(data, ImportanceMethod.LASSO, "no term entered the Lasso path")
    scores = (n_alphas - earliest) / n_alphas
    return ImportanceReport.from_scores(ImportanceMethod.LASSO, dict(zip(data.space.names, scores)))


def fanova_importance(data: TrainingSet, seed: int = 0, settings: Optional[TunerSettings] = None) -> ImportanceReport:
    """First-order variance fraction of each knob over the forest partitions"""
    settings = settings or get_tuner_settings()
    _require_points(data)
    if _is_constant(data.values):
        return _uniform(data, ImportanceMethod.FANOVA, "constant performance")
    fractions = fanova_fractions(_fit_forest(data, seed, settings), data.space)
    if np.any(np.isnan(fractions)):
        return _uniform(data, ImportanceMethod.FANOVA, "zero total prediction variance")
    return ImportanceReport.from_scores(ImportanceMethod.FANOVA, dict(zip(data.space.names, fractions)))


def ablation_importance(data: TrainingSet, seed: int = 0, settings: Optional[TunerSettings] = None) -> ImportanceReport:
    """
    Greedy ablation paths from the default to every better-than-default target,
    with forest predictions standing in for evaluations. Score is the mean
    inverse path rank; knobs that do not differ share rank len(path) + 1.
    """
    settings = settings or get_tuner_settings()
    _require_points(data)
    space, sense = data.space, data.sense
    forest = _fit_forest(data, seed, settings)
    base = encode(space.validate(data.default_config), space, EncodingScheme.RAW).coords
    default_value = data.default_value
    if default_value is None:
        default_value = float(_predict(forest, base[None, :])[0])

    better = np.nonzero(sense.sign * data.values < sense.sign * default_value)[0]
    targets = encode_matrix([data.configs[i] for i in better], space, EncodingScheme.RAW)
    differs = targets != base[None, :]
    keep = differs.any(axis=1)
    better, targets, differs = better[keep], targets[keep], differs[keep]
    if len(better) == 0:
        raise InsufficientDataError("ablation needs a target configuration better than the default")
    order = np.argsort(sense.sign * data.values[better], kind="stable")[: settings.ablation_max_targets]
    targets, differs = targets[order], differs[order]
    logger.debug(f"Tracing {len(targets)} ablation paths")

    n_targets, m = targets.shape
    current = np.tile(base, (n_targets, 1))
    remaining = differs.copy()
    rank = np.zeros((n_targets, m), dtype=int)
    step = 0
    while remaining.any():
        step += 1
        rows_t, cols = np.nonzero(remaining)
        candidates = current[rows_t].copy()
        candidates[np.arange(len(rows_t)), cols] = targets[rows_t, cols]
        gain = -sense.sign * _predict(forest, candidates)
        for t in np.unique(rows_t):
            mine = np.nonzero(rows_t == t)[0]
            pick = mine[int(np.argmax(gain[mine]))]
            j = cols[pick]
            current[t, j] = targets[t, j]
            remaining[t, j] = False
            rank[t, j] = step

    path_length = differs.sum(axis=1, keepdims=True)
    rank = np.where(differs, rank, path_length + 1)
    scores = np.mean(1.0 / rank, axis=0)
    return ImportanceReport.from_scores(ImportanceMethod.ABLATION, dict(zip(space.names, scores)))


def _shapley_exact(forest: ForestModel, x: np.ndarray, base: np.ndarray, players: np.ndarray) -> np.ndarray:
    d = len(players)
    masks = np.arange(2 ** d)
    bits = ((masks[:, None] >> np.arange(d)[None, :]) & 1).astype(bool)
    rows = np.tile(base, (len(masks), 1))
    rows[:, players] = np.where(bits, x[players][None, :], base[players][None, :])
    v = _predict(forest, rows)
    sizes = bits.sum(axis=1)
    weights = np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d) if s < d else 0.0
                        for s in range(d + 1)])
    phi = np.zeros(d)
    for i in range(d):
        without = masks[~bits[:, i]]
        phi[i] = np.sum(weights[sizes[without]] * (v[without | (1 << i)] - v[without]))
    return phi


def _shapley_sampled(
    forest: ForestModel,
    x: np.ndarray,
    base: np.ndarray,
    players: np.ndarray,
    n_permutations: int,
    rng: np.random.Generator,
) -> np.ndarray:
    d = len(players)
    positions = np.argsort(np.vstack([rng.permutation(d) for _ in range(n_permutations)]), axis=1)
    prefix = positions[:, None, :] < np.arange(d + 1)[None, :, None]       # (P, d+1, d)
    rows = np.tile(base, (n_permutations * (d + 1), 1))
    rows[:, players] = np.where(prefix.reshape(-1, d), x[players][None, :], base[players][None, :])
    v = _predict(forest, rows).reshape(n_permutations, d + 1)
    gains = np.take_along_axis(v, positions + 1, axis=1) - np.take_along_axis(v, positions, axis=1)
    return gains.mean(axis=0)


def shapley_values(
    forest: ForestModel,
    data: TrainingSet,
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
) -> np.ndarray:
    """
    (n, m) Shapley values of prediction(x) - prediction(default) per observation.
    Knobs equal to the default are null players; exact enumeration over the
    others when they are few, permutation sampling otherwise.
    """
    settings = settings or get_tuner_settings()
    space = data.space
    base = encode(space.validate(data.default_config), space, EncodingScheme.RAW).coords
    X = encode_matrix(data.configs, space, EncodingScheme.RAW)
    phi = np.zeros_like(X)
    for i, x in enumerate(X):
        players = np.nonzero(x != base)[0]
        if len(players) == 0:
            continue
        if len(players) <= settings.shap_exact_max_knobs:
            phi[i, players] = _shapley_exact(forest, x, base, players)
        else:
            rng = np.random.default_rng([seed, i])
            phi[i, players] = _shapley_sampled(forest, x, base, players, settings.shap_permutations, rng)
    return phi


def shap_importance(data: TrainingSet, seed: int = 0, settings: Optional[TunerSettings] = None) -> ImportanceReport:
    """Tunability: mean positive Shapley value against the default configuration"""
    settings = settings or get_tuner_settings()
    _require_points(data)
    forest = _fit_forest(data, seed, settings)
    explained = data
    if len(data) > settings.shap_max_observations:
        rows = np.sort(np.random.default_rng([seed, 0x5A]).choice(len(data), settings.shap_max_observations, replace=False))
        explained = TrainingSet(data.space, [data.configs[i] for i in rows], data.values[rows], data.sense,
                                data.default_config, data.default_value)
        logger.info(f"SHAP explains {len(rows)} of {len(data)} observations")
    phi = shapley_values(forest, explained, seed, settings)
    scores = np.mean(np.maximum(-data.sense.sign * phi, 0.0), axis=0)
    return ImportanceReport.from_scores(ImportanceMethod.SHAP, dict(zip(data.space.names, scores)))


def compute_importance(
    method: Union[ImportanceMethod, str],
    data: TrainingSet,
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
) -> ImportanceReport:
    method = ImportanceMethod(method)
    if method == ImportanceMethod.LASSO:
        report = lasso_importance(data, settings=settings)
    else:
        measure = {
            ImportanceMethod.GINI: gini_importance,
            ImportanceMethod.FANOVA: fanova_importance,
            ImportanceMethod.ABLATION: ablation_importance,
            ImportanceMethod.SHAP: shap_importance,
        }[method]
        report = measure(data, seed, settings)
    logger.info(f"{method.value} importance, top knob: {report.ranking[0]}")
    return report


def topk(report: ImportanceReport, k: int) -> List[str]:
    if not 1 <= k <= len(report.ranking):
        raise SpaceError(f"k={k} outside [1, {len(report.ranking)}]")
    return list(report.ranking[:k])


def iou_topk(a: Union[Set[str], Sequence[str]], b: Union[Set[str], Sequence[str]]) -> float:
    """Intersection over union of two knob sets; two empty sets are identical"""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def incremental_schedule(kind: Union[ScheduleKind, str], total_knobs: int, iteration: int) -> int:
    """Number of top-ranked knobs tuned at an iteration"""
    if iteration < 0:
        raise SpaceError(f"iteration must be >= 0, got {iteration}")
    if ScheduleKind(kind) == ScheduleKind.INCREASE:
        # start with four knobs, add two every four iterations
        return min(4 + 2 * (iteration // 4), total_knobs)
    # drop 40% of the knobs every twenty iterations
    return max(1, math.ceil(total_knobs * 0.6 ** (iteration // 20) - 1e-9))


def ranking_stability(
    data: TrainingSet,
    method: Union[ImportanceMethod, str],
    sample_sizes: Sequence[int],
    k: int,
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
) -> Dict[int, float]:
    """IoU of the top-k knobs from random subsamples against the top-k from all data"""
    reference = set(topk(compute_importance(method, data, seed, settings), k))
    stability: Dict[int, float] = {}
    for size in sample_sizes:
        size = min(int(size), len(data))
        rows = np.sort(np.random.default_rng([seed, size]).choice(len(data), size, replace=False))
        subset = TrainingSet(data.space, [data.configs[i] for i in rows], data.values[rows], data.sense,
                             data.default_config, data.default_value)
        stability[size] = iou_topk(reference, topk(compute_importance(method, subset, seed, settings), k))
        logger.debug(f"{size} samples: IoU {stability[size]:.3f}")
    return stability


def save_report(report: ImportanceReport, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(report.model_dump(mode="json"), f, indent=2)


def load_report(path: Union[str, Path]) -> ImportanceReport:
    try:
        with open(path) as f:
            return ImportanceReport.model_validate(json.load(f))
    except (ValidationError, json.JSONDecodeError) as e:
        raise TuningError(f"malformed importance report {path}: {e}") from e
