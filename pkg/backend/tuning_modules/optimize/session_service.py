"""
Ask/tell tuning sessions over a shared interface for every optimizer kind
"""
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import TunerSettings, get_tuner_settings

from ..errors import BudgetExhaustedError, InsufficientDataError, SessionError
from ..models.history_models import History, Observation, Sense, Status
from ..models.session_models import OptimizerKind
from ..models.space_models import ConfigSpace, Configuration
from ..space.space_service import lhs_sample
from .base import Optimizer
from .genetic_service import GeneticOptimizer
from .model_based import GaussianProcessOptimizer, RandomOptimizer, SmacOptimizer, TpeOptimizer
from .turbo_service import TurboOptimizer

if TYPE_CHECKING:
    from ..transfer.transfer_service import TransferContext

# Setup logging
logger = logging.getLogger(__name__)


@dataclass
class TuningSession:
    """Single-owner mutable tuning state; change it only through observe."""

    space: ConfigSpace
    kind: OptimizerKind
    sense: Sense
    budget: int
    seed: int
    n_init: int
    settings: TunerSettings
    init_design: List[Configuration]
    history: History
    optimizer: Optimizer
    transfer: Optional["TransferContext"] = None

    @property
    def remaining(self) -> int:
        return self.budget - len(self.history)

    @property
    def in_init_phase(self) -> bool:
        return self.optimizer.uses_init_design and len(self.history) < len(self.init_design)


def make_optimizer(kind: OptimizerKind, space: ConfigSpace, seed: int, settings: TunerSettings) -> Optimizer:
    if kind.uses_gaussian_process:
        return GaussianProcessOptimizer(kind)
    if kind == OptimizerKind.SMAC:
        return SmacOptimizer()
    if kind == OptimizerKind.TPE:
        return TpeOptimizer()
    if kind == OptimizerKind.TURBO:
        return TurboOptimizer(settings)
    if kind == OptimizerKind.GA:
        return GeneticOptimizer(space, seed, settings)
    return RandomOptimizer()


def new_session(
    space: ConfigSpace,
    kind: Union[OptimizerKind, str],
    sense: Union[Sense, str],
    budget: int,
    seed: int,
    n_init: Optional[int] = None,
    settings: Optional[TunerSettings] = None,
    transfer=None,
) -> TuningSession:
    """Create a session whose first n_init suggestions are an LHS design"""
    settings = settings or get_tuner_settings()
    try:
        kind = OptimizerKind(kind)
        sense = Sense(sense)
    except ValueError as e:
        raise SessionError(str(e)) from e
    n_init = settings.n_init if n_init is None else int(n_init)
    if n_init < 1:
        raise SessionError(f"n_init must be >= 1, got {n_init}")
    if budget < n_init:
        raise SessionError(f"budget {budget} is smaller than the initial design size {n_init}")
    if transfer is not None and not kind.supports_transfer:
        raise SessionError(f"optimizer '{kind.value}' does not support transfer")

    optimizer = make_optimizer(kind, space, seed, settings)
    init_design = lhs_sample(space, n_init, seed) if optimizer.uses_init_design else []
    session = TuningSession(
        space=space,
        kind=kind,
        sense=sense,
        budget=int(budget),
        seed=int(seed),
        n_init=n_init,
        settings=settings,
        init_design=init_design,
        history=History(sense),
        optimizer=optimizer,
        transfer=transfer,
    )
    logger.info(f"Created {kind.value} session on '{space.name}' ({len(space)} knobs, budget {budget}, seed {seed})")
    return session


def _suggestion_rng(session: TuningSession) -> np.random.Generator:
    return np.random.default_rng([session.seed, len(session.history), 0x5EED])


def suggest(session: TuningSession) -> Configuration:
    """Next configuration to evaluate; a pure function of the session state"""
    if len(session.history) >= session.budget:
        raise BudgetExhaustedError(f"budget of {session.budget} evaluations exhausted")
    if session.in_init_phase:
        config = session.init_design[len(session.history)]
    else:
        config = session.optimizer.suggest(session, _suggestion_rng(session))
    return session.space.validate(config)


def _kind_suggest(session: TuningSession, *kinds: OptimizerKind) -> Configuration:
    if session.kind not in kinds:
        raise SessionError(f"session runs '{session.kind.value}', not {[k.value for k in kinds]}")
    return suggest(session)


def vanilla_bo_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.VANILLA_BO)


def onehot_bo_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.ONEHOT_BO)


def mixed_bo_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.MIXED_BO)


def smac_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.SMAC)


def tpe_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.TPE)


def turbo_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.TURBO)


def ga_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.GA)


def random_suggest(session: TuningSession) -> Configuration:
    return _kind_suggest(session, OptimizerKind.RANDOM)


def handle_failure(history: History, sense: Optional[Sense] = None, sentinel: Optional[float] = None) -> float:
    """Worst successful value so far, or the ±sentinel before any success"""
    sense = Sense(sense or history.sense)
    ok = history.ok_values()
    if len(ok):
        return sense.worst(ok)
    magnitude = get_tuner_settings().failure_sentinel if sentinel is None else sentinel
    return magnitude if sense == Sense.MINIMIZE else -magnitude


def observe(
    session: TuningSession,
    config: Configuration,
    value: float,
    status: Union[Status, str] = Status.OK,
    metrics: Optional[Sequence[float]] = None,
) -> TuningSession:
    """Record an evaluation; failures store the substituted value"""
    config = session.space.validate(config)
    status = Status(status)
    value = float(value) if value is not None else math.nan
    if status == Status.FAILED or not math.isfinite(value):
        substituted = handle_failure(session.history, session.sense, session.settings.failure_sentinel)
        logger.warning(f"Iteration {len(session.history)} failed; storing {substituted:g}")
        status, value = Status.FAILED, substituted

    observation = Observation(
        config=config,
        value=value,
        status=status,
        iteration=len(session.history),
        metrics=tuple(float(m) for m in metrics) if metrics is not None else None,
    )
    session.history.append(observation)
    session.optimizer.observe(session, observation)
    logger.debug(f"{session.kind.value} iteration {observation.iteration}: value={value:g} ({status.value})")
    return session


def best_so_far(history: History) -> Tuple[Configuration, float]:
    """Best successful observation, earliest on ties"""
    best: Optional[Observation] = None
    for record in history:
        if record.ok and (best is None or history.sense.is_better(record.value, best.value)):
            best = record
    if best is None:
        raise InsufficientDataError("history has no successful observations")
    return best.config, best.value


def best_so_far_curve(history: History) -> np.ndarray:
    """Running best per iteration (NaN until the first success)"""
    curve = np.full(len(history), np.nan)
    best = math.nan
    for i, record in enumerate(history):
        if record.ok and (math.isnan(best) or history.sense.is_better(record.value, best)):
            best = record.value
        curve[i] = best
    return curve
