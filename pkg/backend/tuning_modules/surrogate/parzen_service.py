"""
Parzen density pairs for the tree-structured Parzen estimator.

Each knob gets an independent 1-D estimator: a truncated Gaussian KDE on
[0, 1] (unit coordinates) for numeric knobs, Laplace-smoothed frequencies for
categoricals. Both mix in a uniform prior component with weight 1/(n+1).
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm, truncnorm

from config.settings import TunerSettings, get_tuner_settings

from ..errors import InsufficientDataError
from ..models.history_models import History
from ..models.space_models import ConfigSpace, Configuration, KnobSpec

# Setup logging
logger = logging.getLogger(__name__)

_DENSITY_FLOOR = 1e-12


@dataclass(frozen=True)
class NumericParzen:
    centers: np.ndarray
    bandwidth: float

    @property
    def prior_weight(self) -> float:
        return 1.0 / (len(self.centers) + 1)

    def _masses(self) -> np.ndarray:
        # kernel mass inside [0, 1], used to renormalize truncated components
        return norm.cdf((1.0 - self.centers) / self.bandwidth) - norm.cdf(-self.centers / self.bandwidth)

    def density(self, u: Union[float, np.ndarray]) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        inside = (u >= 0.0) & (u <= 1.0)
        if len(self.centers) == 0:
            return inside.astype(float)
        comps = norm.pdf((u[:, None] - self.centers[None, :]) / self.bandwidth) / self.bandwidth
        comps = comps / np.maximum(self._masses(), _DENSITY_FLOOR)
        w = self.prior_weight
        return np.where(inside, w * 1.0 + (1.0 - w) * comps.mean(axis=1), 0.0)

    def sample(self, rng: np.random.Generator) -> float:
        n = len(self.centers)
        pick = int(rng.integers(n + 1))
        if pick == n:
            return float(rng.uniform())
        mu, h = float(self.centers[pick]), self.bandwidth
        return float(truncnorm.rvs(-mu / h, (1.0 - mu) / h, loc=mu, scale=h, random_state=rng))


@dataclass(frozen=True)
class CategoricalParzen:
    probabilities: np.ndarray

    def density(self, index: Union[int, np.ndarray]) -> np.ndarray:
        return self.probabilities[np.atleast_1d(np.asarray(index, dtype=int))]

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.probabilities), p=self.probabilities))


KnobParzen = Union[NumericParzen, CategoricalParzen]


@dataclass(frozen=True)
class ParzenPair:
    """Good density l(θ) and bad density g(θ), both products over knobs."""

    space: ConfigSpace
    gamma: float
    good: Dict[str, KnobParzen]
    bad: Dict[str, KnobParzen]
    n_good: int
    n_bad: int


def _fit_knob(knob: KnobSpec, values: Sequence, floor: float) -> KnobParzen:
    if not knob.is_numeric:
        counts = np.ones(knob.n_categories)
        for v in values:
            counts[knob.category_index(v)] += 1.0
        return CategoricalParzen(counts / counts.sum())
    centers = np.array([knob.to_unit(v) for v in values], dtype=float)
    n = len(centers)
    sigma = float(np.std(centers)) if n > 1 else 0.0
    # Silverman-style rule
    bandwidth = 1.06 * sigma * n ** (-0.2) if n > 0 else 1.0
    return NumericParzen(centers, max(bandwidth, floor))


def _knob_coordinate(knob: KnobSpec, value) -> float:
    return knob.category_index(value) if not knob.is_numeric else knob.to_unit(value)


def tpe_fit(
    history: History,
    space: ConfigSpace,
    gamma: Optional[float] = None,
    settings: Optional[TunerSettings] = None,
) -> ParzenPair:
    """Split the history at the γ-quantile and fit per-knob good/bad densities"""
    settings = settings or get_tuner_settings()
    gamma = settings.tpe_gamma if gamma is None else float(gamma)
    if len(history.ok_records()) < 2:
        raise InsufficientDataError("TPE needs at least 2 successful observations")

    # failed records carry their substituted value and count as observations
    values = history.values() * history.sense.sign
    order = np.argsort(values, kind="stable")      # ties keep observation order
    n = len(values)
    n_good = min(max(1, math.ceil(gamma * n)), n - 1)
    configs = history.configs()
    good_configs = [configs[i] for i in order[:n_good]]
    bad_configs = [configs[i] for i in order[n_good:]]

    floor = settings.tpe_bandwidth_floor
    good = {k.name: _fit_knob(k, [c[k.name] for c in good_configs], floor) for k in space.knobs}
    bad = {k.name: _fit_knob(k, [c[k.name] for c in bad_configs], floor) for k in space.knobs}
    return ParzenPair(space=space, gamma=gamma, good=good, bad=bad, n_good=n_good, n_bad=n - n_good)


def log_density(estimators: Dict[str, KnobParzen], space: ConfigSpace, configs: Sequence[Configuration]) -> np.ndarray:
    total = np.zeros(len(configs))
    for knob in space.knobs:
        coords = np.array([_knob_coordinate(knob, c[knob.name]) for c in configs])
        total += np.log(np.maximum(estimators[knob.name].density(coords), _DENSITY_FLOOR))
    return total


def tpe_score_batch(pair: ParzenPair, configs: Sequence[Configuration]) -> np.ndarray:
    log_ratio = log_density(pair.good, pair.space, configs) - log_density(pair.bad, pair.space, configs)
    return np.exp(np.clip(log_ratio, -700.0, 700.0))


def tpe_score(pair: ParzenPair, config: Configuration) -> float:
    """Density ratio l(θ)/g(θ), with g floored"""
    return float(tpe_score_batch(pair, [config])[0])


def sample_good(pair: ParzenPair, n: int, rng: np.random.Generator) -> List[Configuration]:
    """Draw configurations knob by knob from l(θ)"""
    samples: List[Configuration] = []
    for _ in range(n):
        config: Configuration = {}
        for knob in pair.space.knobs:
            est = pair.good[knob.name]
            if knob.is_numeric:
                config[knob.name] = knob.from_unit(est.sample(rng))
            else:
                config[knob.name] = knob.categories[est.sample(rng)]
        samples.append(config)
    return samples
