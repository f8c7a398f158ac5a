"""
Optimizer strategy interface and helpers shared by every optimizer kind
"""
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, List, Set, Tuple

import numpy as np

from ..models.history_models import History, Observation
from ..models.session_models import OptimizerKind
from ..models.space_models import Configuration
from ..space.space_service import random_sample

if TYPE_CHECKING:
    from .session_service import TuningSession


class Optimizer(ABC):
    """Per-kind optimizer state; mutated only from observe."""

    kind: OptimizerKind
    uses_init_design: bool = True

    @abstractmethod
    def suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        ...

    def observe(self, session: "TuningSession", observation: Observation) -> None:
        pass


def training_data(history: History) -> Tuple[List[Configuration], np.ndarray]:
    """
    Configurations and values for model fitting. Failed records take the worst
    successful value seen so far, so early no-success sentinels never reach a
    model once a success exists.
    """
    configs = history.configs()
    values = history.values()
    ok = np.array([r.ok for r in history], dtype=bool)
    if ok.any() and not ok.all():
        values = np.where(ok, values, history.sense.worst(values[ok]))
    return configs, values


def has_success(history: History) -> bool:
    return any(r.ok for r in history)


def observed_keys(session: "TuningSession") -> Set[tuple]:
    return {session.space.config_key(c) for c in session.history.configs()}


def best_configs(configs: List[Configuration], scores: np.ndarray, m: int) -> List[Configuration]:
    """The m configurations with lowest scores (minimization units), earliest first on ties."""
    order = np.argsort(np.asarray(scores), kind="stable")
    return [configs[i] for i in order[:m]]


def random_config(session: "TuningSession", rng: np.random.Generator) -> Configuration:
    return random_sample(session.space, 1, rng)[0]


def child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 31 - 1))
