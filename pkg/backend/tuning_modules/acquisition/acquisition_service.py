"""
Acquisition functions and their maximization over heterogeneous spaces
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy.stats import norm

from config.settings import TunerSettings, get_tuner_settings

from ..models.history_models import Sense
from ..models.space_models import ConfigSpace, Configuration, KnobKind, KnobValue
from ..space.space_service import random_sample
from ..surrogate.parzen_service import tpe_score_batch

# Setup logging
logger = logging.getLogger(__name__)

_TIE_EPS = 1e-12


class AcquisitionKind(str, Enum):
    EXPECTED_IMPROVEMENT = "expected_improvement"
    DENSITY_RATIO = "density_ratio"


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: AcquisitionKind
    sense: Sense
    best_observed: float = 0.0


def expected_improvement(
    mean: Union[float, np.ndarray],
    std: Union[float, np.ndarray],
    best: float,
    sense: Sense = Sense.MINIMIZE,
) -> Union[float, np.ndarray]:
    """Closed-form EI; std == 0 reduces to the positive part of the improvement"""
    mean_arr = np.asarray(mean, dtype=float)
    std_arr = np.maximum(np.asarray(std, dtype=float), 0.0)
    improvement = best - mean_arr if Sense(sense) == Sense.MINIMIZE else mean_arr - best
    safe_std = np.where(std_arr > 0, std_arr, 1.0)
    z = improvement / safe_std
    ei = np.where(
        std_arr > 0,
        safe_std * (z * norm.cdf(z) + norm.pdf(z)),
        np.maximum(improvement, 0.0),
    )
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def acquisition_values(spec: AcquisitionSpec, surrogate, configs: Sequence[Configuration]) -> np.ndarray:
    """Acquisition of each configuration; density ratio expects a fitted ParzenPair"""
    if not configs:
        return np.zeros(0)
    if spec.kind == AcquisitionKind.DENSITY_RATIO:
        return tpe_score_batch(surrogate, configs)
    mean, var = surrogate.predict(configs)
    return np.asarray(expected_improvement(mean, np.sqrt(np.maximum(var, 0.0)), spec.best_observed, spec.sense))


def one_exchange_neighbors(space: ConfigSpace, config: Configuration, step: float) -> List[Configuration]:
    """±step on each numeric knob in unit coordinates, every other category on each categorical knob"""
    neighbors: List[Configuration] = []
    for knob in space.knobs:
        current = config[knob.name]
        candidates: List[KnobValue] = []
        if knob.is_numeric:
            u = knob.to_unit(current)
            width = step
            if knob.kind == KnobKind.INTEGER:
                width = max(step, 1.0 / (knob.upper - knob.lower))
            for direction in (-1.0, 1.0):
                value = knob.from_unit(u + direction * width)
                if value != current and value not in candidates:
                    candidates.append(value)
        else:
            candidates = [c for c in knob.categories if c != current]
        for value in candidates:
            neighbor = dict(config)
            neighbor[knob.name] = value
            neighbors.append(neighbor)
    return neighbors


def _local_search(
    space: ConfigSpace,
    start: Configuration,
    evaluate: Callable[[Sequence[Configuration]], np.ndarray],
    budget: int,
    settings: TunerSettings,
) -> Tuple[List[Configuration], List[float]]:
    """Steepest ascent with plateau moves; returns every accepted point."""
    current = start
    current_value = float(evaluate([start])[0])
    visited, values = [start], [current_value]
    plateau = 0
    for _ in range(budget):
        neighbors = one_exchange_neighbors(space, current, settings.acq_local_step)
        if not neighbors:
            break
        scores = evaluate(neighbors)
        best = int(np.argmax(scores))
        if scores[best] > current_value + _TIE_EPS:
            plateau = 0
        elif scores[best] >= current_value - _TIE_EPS:
            plateau += 1
            if plateau >= settings.acq_plateau_limit:
                break
        else:
            break
        current, current_value = neighbors[best], float(scores[best])
        visited.append(current)
        values.append(current_value)
    return visited, values


def maximize_acquisition(
    space: ConfigSpace,
    surrogate,
    spec: AcquisitionSpec,
    seed: int,
    budget: Optional[int] = None,
    starts: Optional[Sequence[Configuration]] = None,
    exclude: Optional[Set[Tuple]] = None,
    settings: Optional[TunerSettings] = None,
) -> Configuration:
    """
    Random candidates plus local searches from the given start configurations.

    `budget` caps the local-search moves per start (0 means random candidates
    only). Candidates whose key is in `exclude` are skipped; the argmax takes
    the lowest pool index on ties, with random candidates ahead of local ones.
    """
    settings = settings or get_tuner_settings()
    budget = settings.acq_local_budget if budget is None else int(budget)
    exclude = exclude or set()
    rng = np.random.default_rng(seed)

    def evaluate(configs: Sequence[Configuration]) -> np.ndarray:
        return acquisition_values(spec, surrogate, configs)

    pool: List[Configuration] = random_sample(space, settings.acq_random_candidates, rng)
    scores: List[float] = list(evaluate(pool))

    if budget > 0 and starts:
        for start in list(starts)[: settings.acq_local_starts]:
            visited, values = _local_search(space, space.validate(start), evaluate, budget, settings)
            pool.extend(visited)
            scores.extend(values)

    order = np.argsort(-np.asarray(scores), kind="stable")
    for i in order:
        if space.config_key(pool[i]) not in exclude:
            return space.validate(pool[i])
    logger.debug("Every acquisition candidate was already evaluated; returning the best one")
    return space.validate(pool[int(order[0])])
