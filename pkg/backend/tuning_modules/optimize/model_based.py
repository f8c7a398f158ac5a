"""
Model-based optimizers: GP Bayesian optimization (vanilla, one-hot, mixed
kernel), SMAC, TPE and the uniform random baseline
"""
import logging
from typing import TYPE_CHECKING, List, Optional, Tuple

import numpy as np

from ..acquisition.acquisition_service import AcquisitionKind, AcquisitionSpec, maximize_acquisition
from ..errors import ModelFitError
from ..models.history_models import Observation, Sense
from ..models.session_models import OptimizerKind
from ..models.space_models import Configuration
from ..space.space_service import encode_matrix, get_layout
from ..surrogate.adapters import Hypers, SurrogateFamily, fit_surrogate, standardized_objective
from ..surrogate.gp_service import gp_fit_hypers
from ..surrogate.parzen_service import sample_good, tpe_fit, tpe_score_batch
from .base import (
    Optimizer,
    best_configs,
    child_seed,
    has_success,
    observed_keys,
    random_config,
    training_data,
)

if TYPE_CHECKING:
    from .session_service import TuningSession

# Setup logging
logger = logging.getLogger(__name__)


class _SurrogateOptimizer(Optimizer):
    """EI maximization over a fitted configuration surrogate, with optional transfer."""

    family: SurrogateFamily

    def _targets(self, session: "TuningSession") -> Tuple[List[Configuration], np.ndarray]:
        configs, values = training_data(session.history)
        return configs, standardized_objective(values, session.sense)

    def _hypers(self, session: "TuningSession") -> Optional[Hypers]:
        return None

    def _surrogate(self, session: "TuningSession", configs, y, seed: int):
        if session.transfer is not None:
            return session.transfer.surrogate(
                session.space, self.family, session.history, configs, y, seed,
                session.settings, self._hypers(session),
            )
        return fit_surrogate(self.family, session.space, configs, y, seed, session.settings, self._hypers(session))

    def _model_suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        if not has_success(session.history):
            return random_config(session, rng)
        configs, y = self._targets(session)
        try:
            surrogate = self._surrogate(session, configs, y, child_seed(rng))
        except ModelFitError as e:
            logger.warning(f"{self.kind.value}: surrogate fit failed ({e}); suggesting a random configuration")
            return random_config(session, rng)
        spec = AcquisitionSpec(AcquisitionKind.EXPECTED_IMPROVEMENT, Sense.MINIMIZE, float(np.min(y)))
        return maximize_acquisition(
            session.space,
            surrogate,
            spec,
            seed=child_seed(rng),
            starts=best_configs(configs, y, session.settings.acq_local_starts),
            exclude=observed_keys(session),
            settings=session.settings,
        )


class GaussianProcessOptimizer(_SurrogateOptimizer):
    """
    GP-BO with EI. Kernel hyperparameters are refit after every observation up
    to `hyper_refit_every_iter_until` points, then every `hyper_refit_period`.
    """

    _FAMILIES = {
        OptimizerKind.VANILLA_BO: SurrogateFamily.GP_RBF_UNIT,
        OptimizerKind.ONEHOT_BO: SurrogateFamily.GP_RBF_ONEHOT,
        OptimizerKind.MIXED_BO: SurrogateFamily.GP_MIXED,
    }

    def __init__(self, kind: OptimizerKind):
        self.kind = kind
        self.family = self._FAMILIES[kind]
        self.hypers: Optional[Hypers] = None
        self.hypers_fitted_at = 0

    def _hypers(self, session: "TuningSession") -> Optional[Hypers]:
        return self.hypers

    def observe(self, session: "TuningSession", observation: Observation) -> None:
        n = len(session.history)
        if n < max(session.n_init, 2) or not has_success(session.history):
            return
        settings = session.settings
        due = (
            self.hypers is None
            or n <= settings.hyper_refit_every_iter_until
            or n - self.hypers_fitted_at >= settings.hyper_refit_period
        )
        if not due:
            return
        configs, y = self._targets(session)
        X = encode_matrix(configs, session.space, self.family.scheme)
        layout = get_layout(session.space, self.family.scheme)
        self.hypers = gp_fit_hypers(X, y, self.family.kernel_family, layout, seed=session.seed + n, settings=settings)
        self.hypers_fitted_at = n

    def suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        return self._model_suggest(session, rng)


class SmacOptimizer(_SurrogateOptimizer):
    """Random-forest EI with a uniform-random suggestion every `smac_random_interleave` steps."""

    kind = OptimizerKind.SMAC
    family = SurrogateFamily.FOREST

    def suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        interleave = session.settings.smac_random_interleave
        step = len(session.history) - session.n_init
        if interleave > 1 and step % interleave == interleave - 1:
            logger.debug(f"smac: interleaved random suggestion at iteration {len(session.history)}")
            return random_config(session, rng)
        return self._model_suggest(session, rng)


class TpeOptimizer(Optimizer):
    kind = OptimizerKind.TPE

    def suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        if len(session.history.ok_records()) < 2:
            return random_config(session, rng)
        pair = tpe_fit(session.history, session.space, settings=session.settings)
        candidates = sample_good(pair, session.settings.tpe_candidates, rng)
        scores = tpe_score_batch(pair, candidates)
        return candidates[int(np.argmax(scores))]


class RandomOptimizer(Optimizer):
    kind = OptimizerKind.RANDOM

    def suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        return random_config(session, rng)
