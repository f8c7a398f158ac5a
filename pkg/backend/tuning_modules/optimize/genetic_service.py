"""
Genetic-algorithm optimizer: LHS population, selection, uniform crossover
and per-knob mutation
"""
import logging
from typing import TYPE_CHECKING, List, Optional

import numpy as np

from config.settings import TunerSettings

from ..models.history_models import Observation, Sense
from ..models.session_models import OptimizerKind
from ..models.space_models import ConfigSpace, Configuration
from ..space.space_service import lhs_sample
from .base import Optimizer

if TYPE_CHECKING:
    from .session_service import TuningSession

# Setup logging
logger = logging.getLogger(__name__)


def selection_weights(values: np.ndarray, sense: Sense) -> np.ndarray:
    """Fitness-proportional weights for maximization, rank-based for minimization"""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if Sense(sense) == Sense.MINIMIZE:
        ranks = np.empty(n)
        ranks[np.argsort(values, kind="stable")] = np.arange(n)
        weights = n - ranks
    else:
        spread = float(np.max(values) - np.min(values))
        if spread <= 0:
            return np.full(n, 1.0 / n)
        weights = values - np.min(values) + 1e-6 * spread
    return weights / weights.sum()


def crossover(parent_a: Configuration, parent_b: Configuration, space: ConfigSpace,
              rng: np.random.Generator) -> Configuration:
    """Uniform crossover: each knob comes from either parent with probability 1/2"""
    take_a = rng.random(len(space)) < 0.5
    return {k.name: (parent_a if take_a[i] else parent_b)[k.name] for i, k in enumerate(space.knobs)}


def mutate(config: Configuration, space: ConfigSpace, probability: float, step: float,
           rng: np.random.Generator) -> Configuration:
    """Gaussian step in unit coordinates for numeric knobs, uniform resample for categoricals"""
    child = dict(config)
    flips = rng.random(len(space)) < probability
    for knob, flip in zip(space.knobs, flips):
        if not flip:
            continue
        if knob.is_numeric:
            child[knob.name] = knob.from_unit(knob.to_unit(child[knob.name]) + rng.normal(0.0, step))
        else:
            child[knob.name] = knob.categories[int(rng.integers(knob.n_categories))]
    return child


class GeneticOptimizer(Optimizer):
    kind = OptimizerKind.GA
    uses_init_design = False

    def __init__(self, space: ConfigSpace, seed: int, settings: TunerSettings):
        self.generation = 0
        self.population: List[Configuration] = lhs_sample(space, settings.ga_population, seed)
        self.fitness: List[Optional[float]] = [None] * len(self.population)
        self.cursor = 0

    def suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        return self.population[self.cursor]

    def observe(self, session: "TuningSession", observation: Observation) -> None:
        # the observed configuration takes the slot it was suggested for
        self.population[self.cursor] = observation.config
        self.fitness[self.cursor] = observation.value
        self.cursor += 1
        if self.cursor == len(self.population):
            self._breed(session)

    def _breed(self, session: "TuningSession") -> None:
        settings = session.settings
        rng = np.random.default_rng([session.seed, self.generation, 0x6A])
        weights = selection_weights(np.asarray(self.fitness, dtype=float), session.sense)
        offspring: List[Configuration] = []
        for _ in range(len(self.population)):
            a, b = rng.choice(len(self.population), size=2, p=weights)
            child = crossover(self.population[a], self.population[b], session.space, rng)
            child = mutate(child, session.space, settings.ga_mutation_prob, settings.ga_mutation_step, rng)
            offspring.append(session.space.validate(child))
        self.population = offspring
        self.fitness = [None] * len(offspring)
        self.cursor = 0
        self.generation += 1
        logger.debug(f"ga: bred generation {self.generation} at iteration {len(session.history)}")
