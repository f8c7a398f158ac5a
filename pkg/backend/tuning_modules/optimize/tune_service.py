"""
Ask/tell tuning loop against an objective callable
"""
import logging
import math
from typing import Callable, Optional, Union

from tqdm import tqdm

from config.settings import TunerSettings

from ..errors import InsufficientDataError, ObjectiveError
from ..models.history_models import EvaluationResult, Sense, Status
from ..models.session_models import OptimizerKind
from ..models.space_models import ConfigSpace, Configuration
from ..space.space_service import SubspaceCompletion
from .session_service import TuningSession, best_so_far, new_session, observe, suggest

# Setup logging
logger = logging.getLogger(__name__)

Objective = Callable[[Configuration], Union[EvaluationResult, float]]


def evaluate_objective(objective: Objective, config: Configuration) -> EvaluationResult:
    """Call the objective; ObjectiveError and non-finite values become failed results"""
    try:
        result = objective(config)
    except ObjectiveError as e:
        return EvaluationResult(math.nan, Status.FAILED, message=str(e))
    if not isinstance(result, EvaluationResult):
        result = EvaluationResult(float(result))
    if result.status == Status.OK and not math.isfinite(result.value):
        return EvaluationResult(math.nan, Status.FAILED, result.metrics, "objective returned a non-finite value")
    return result


def tune(
    space: ConfigSpace,
    objective: Objective,
    kind: Union[OptimizerKind, str],
    sense: Union[Sense, str],
    budget: int,
    seed: int,
    n_init: Optional[int] = None,
    settings: Optional[TunerSettings] = None,
    completion: Optional[SubspaceCompletion] = None,
    transfer=None,
    progress: bool = False,
) -> TuningSession:
    """
    Run a full session. When `completion` is given, `space` is the reduced
    space and the objective receives completed full configurations.
    """
    session = new_session(space, kind, sense, budget, seed, n_init, settings, transfer)
    for _ in tqdm(range(budget), desc=f"{session.kind.value} seed {seed}", disable=not progress):
        config = suggest(session)
        full = completion(config) if completion is not None else config
        result = evaluate_objective(objective, full)
        if result.status == Status.FAILED and result.message:
            logger.warning(f"Evaluation {len(session.history)} failed: {result.message}")
        observe(session, config, result.value, result.status, result.metrics)

    try:
        _, best = best_so_far(session.history)
        logger.info(f"{session.kind.value} seed {seed} finished: best {best:g} after {len(session.history)} evaluations")
    except InsufficientDataError:
        logger.info(f"{session.kind.value} seed {seed} finished without a successful evaluation")
    return session
