"""
Shipped synthetic tuning problems and dataset generators.

The mixed-space family is an additive quadratic over the numeric knobs plus
per-category offsets and one non-negative interaction between the first two
numeric knobs. Every term is minimized at a known point, so the optimum is
analytic: numeric knobs at their centers, categoricals at their cheapest
category, value `base`.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import TunerSettings

from ..datastore.tabular_store import write_trajectory
from ..models.history_models import Sense, Status
from ..models.importance_models import TrainingSet
from ..models.session_models import OptimizerKind
from ..models.space_models import ConfigSpace, Configuration, KnobKind, KnobSpec
from ..optimize.tune_service import evaluate_objective, tune
from ..space.space_service import lhs_sample

# Setup logging
logger = logging.getLogger(__name__)


def synthetic_space(
    n_numeric: int = 8,
    n_categorical: int = 2,
    n_categories: int = 4,
    name: str = "synthetic",
) -> ConfigSpace:
    """Every third numeric knob is an integer in [1, 64], the rest continuous in [0, 100]; defaults at the lower bound"""
    knobs: List[KnobSpec] = []
    for i in range(n_numeric):
        if i % 3 == 2:
            knobs.append(KnobSpec(f"x{i}", KnobKind.INTEGER, default=1, lower=1, upper=64))
        else:
            knobs.append(KnobSpec(f"x{i}", KnobKind.CONTINUOUS, default=0.0, lower=0.0, upper=100.0))
    for j in range(n_categorical):
        categories = tuple(f"opt{c}" for c in range(n_categories))
        knobs.append(KnobSpec(f"c{j}", KnobKind.CATEGORICAL, default=categories[0], categories=categories))
    return ConfigSpace(name=name, knobs=tuple(knobs))


@dataclass
class SyntheticObjective:
    """
    Mixed-space analytic objective. `heterogeneity` scales the categorical
    offsets so categorical knobs dominate the response.
    """

    space: ConfigSpace
    seed: int = 0
    sense: Sense = Sense.MINIMIZE
    heterogeneity: float = 1.0
    interaction: float = 1.0
    base: float = 1.0
    weights: np.ndarray = field(init=False, repr=False)
    centers: np.ndarray = field(init=False, repr=False)
    offsets: Dict[str, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.sense = Sense(self.sense)
        rng = np.random.default_rng([self.seed, 0xBE])
        numeric = [k for k in self.space.knobs if k.is_numeric]
        self.weights = rng.uniform(0.5, 2.0, size=len(numeric))
        centers = rng.uniform(0.1, 0.9, size=len(numeric))
        for i, knob in enumerate(numeric):
            # integer centers sit on the grid so the optimum is reachable
            centers[i] = knob.to_unit(knob.from_unit(centers[i]))
        self.centers = centers
        self.offsets = {}
        for knob in self.space.knobs:
            if not knob.is_numeric:
                offsets = rng.uniform(0.0, 1.0, size=knob.n_categories) * self.heterogeneity
                self.offsets[knob.name] = offsets - offsets.min()

    @property
    def _numeric(self) -> List[KnobSpec]:
        return [k for k in self.space.knobs if k.is_numeric]

    def _loss(self, config: Configuration) -> float:
        u = np.array([k.to_unit(config[k.name]) for k in self._numeric])
        gap = (u - self.centers) ** 2
        loss = self.base + float(np.sum(self.weights * gap))
        if len(gap) >= 2:
            loss += self.interaction * float(gap[0] * gap[1])
        for name, offsets in self.offsets.items():
            loss += float(offsets[self.space.knob(name).category_index(config[name])])
        return loss

    @property
    def peak_loss(self) -> float:
        """Upper bound of the loss over the space"""
        worst_gap = np.maximum(self.centers, 1.0 - self.centers) ** 2
        bound = self.base + float(np.sum(self.weights * worst_gap))
        if len(worst_gap) >= 2:
            bound += self.interaction * float(worst_gap[0] * worst_gap[1])
        return bound + sum(float(o.max()) for o in self.offsets.values())

    def __call__(self, config: Configuration) -> float:
        loss = self._loss(self.space.validate(config))
        if self.sense == Sense.MINIMIZE:
            return loss
        return self.peak_loss + self.base - loss

    @property
    def optimum_config(self) -> Configuration:
        config: Configuration = {}
        for knob, center in zip(self._numeric, self.centers):
            config[knob.name] = knob.from_unit(center)
        for name, offsets in self.offsets.items():
            config[name] = self.space.knob(name).categories[int(np.argmin(offsets))]
        return self.space.validate({k.name: config[k.name] for k in self.space.knobs})

    @property
    def optimum_value(self) -> float:
        return self(self.optimum_config)


def synthetic_objective(
    space: ConfigSpace,
    seed: int = 0,
    sense: Union[Sense, str] = Sense.MINIMIZE,
    heterogeneity: bool = False,
) -> SyntheticObjective:
    return SyntheticObjective(space, seed=seed, sense=Sense(sense), heterogeneity=5.0 if heterogeneity else 1.0)


def additive_importance_space() -> ConfigSpace:
    knobs = [KnobSpec(f"x{i}", KnobKind.CONTINUOUS, default=0.0, lower=0.0, upper=1.0) for i in range(4)]
    knobs.append(KnobSpec("c0", KnobKind.CATEGORICAL, default="a", categories=("a", "b", "c")))
    return ConfigSpace(name="additive", knobs=tuple(knobs))


def additive_importance_dataset(n: int = 300, seed: int = 0, noise: float = 0.01) -> TrainingSet:
    """
    y = 10*x0 + 0.3*x1 + 0.2*x2 + small categorical offset + noise, maximized.
    x0 explains more than 99% of the variance; x3 is inert. The default sits
    at every lower bound with value 0.
    """
    space = additive_importance_space()
    configs = lhs_sample(space, n, seed)
    rng = np.random.default_rng([seed, 0xAD])
    offsets = {"a": 0.0, "b": 0.05, "c": 0.1}
    values = np.array([
        10.0 * c["x0"] + 0.3 * c["x1"] + 0.2 * c["x2"] + offsets[c["c0"]] for c in configs
    ]) + rng.normal(0.0, noise, size=n)
    return TrainingSet(
        space=space,
        configs=configs,
        values=values,
        sense=Sense.MAXIMIZE,
        default_config=space.default_configuration(),
        default_value=0.0,
    )


def generate_dataset(
    space: ConfigSpace,
    objective: SyntheticObjective,
    n_lhs: int,
    out_dir: Union[str, Path],
    optimizer_runs: Sequence[Tuple[Union[OptimizerKind, str], int]] = (),
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
) -> List[Path]:
    """
    Write `lhs.csv` (knob columns + performance + status) and one trajectory
    CSV per (optimizer, budget) run; together they are the input of a
    benchmark build.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    rows = []
    for config in lhs_sample(space, n_lhs, seed):
        result = evaluate_objective(objective, config)
        rows.append({**config, "performance": result.value, "status": result.status.value})
    lhs_path = out_dir / "lhs.csv"
    pd.DataFrame(rows, columns=[*space.names, "performance", "status"]).to_csv(lhs_path, index=False)
    written.append(lhs_path)
    failed = sum(1 for r in rows if r["status"] == Status.FAILED.value)
    logger.info(f"Wrote {n_lhs} LHS samples to {lhs_path} ({failed} failed)")

    for kind, budget in optimizer_runs:
        kind = OptimizerKind(kind)
        session = tune(space, objective, kind, objective.sense, budget, seed, settings=settings, progress=True)
        written.append(write_trajectory(session.history, space, out_dir / f"{kind.value}_seed{seed}.csv"))
    return written
