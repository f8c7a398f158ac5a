"""
Multi-region trust-region Bayesian optimization (TuRBO-m style).

Each region keeps its own GP over the unit encoding of the observations it
owns. Every suggestion draws one joint posterior sample per region over
candidates inside the region box; the region whose sample reaches the lowest
value proposes its minimizer.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

import numpy as np

from config.settings import TunerSettings

from ..errors import ModelFitError
from ..models.history_models import Observation
from ..models.session_models import OptimizerKind
from ..models.space_models import ConfigSpace, Configuration, EncodingScheme
from ..space.space_service import decode_matrix, encode_matrix, get_layout, lhs_sample
from ..surrogate.gp_service import gp_fit, gp_fit_hypers, gp_posterior_samples
from ..surrogate.kernels import Kernel, KernelFamily, kernel_for_layout
from .base import Optimizer, random_config, training_data

if TYPE_CHECKING:
    from .session_service import TuningSession

# Setup logging
logger = logging.getLogger(__name__)

_SCHEME = EncodingScheme.UNIT


@dataclass
class TrustRegionState:
    """One trust region: an axis-aligned box of side `length` around `center`."""

    region_id: int
    length: float
    center: Optional[Configuration] = None
    best_value: float = math.inf          # minimization units
    success_count: int = 0
    failure_count: int = 0
    members: List[int] = field(default_factory=list)
    pending: List[Configuration] = field(default_factory=list)
    restarts: int = 0
    hypers: Optional[Tuple[Kernel, float]] = None
    hypers_fitted_at: int = 0

    def update(self, improved: bool, settings: TunerSettings) -> None:
        """Advance the success/failure counters and resize the box."""
        if improved:
            self.success_count += 1
            self.failure_count = 0
        else:
            self.failure_count += 1
            self.success_count = 0
        if self.success_count >= settings.turbo_success_tolerance:
            self.length = min(2.0 * self.length, settings.turbo_length_max)
            self.success_count = 0
        elif self.failure_count >= settings.turbo_failure_tolerance:
            self.length /= 2.0
            self.failure_count = 0

    def needs_restart(self, settings: TunerSettings) -> bool:
        return self.length < settings.turbo_length_min

    def box(self, space: ConfigSpace) -> Tuple[np.ndarray, np.ndarray]:
        center = encode_matrix([self.center], space, _SCHEME)[0]
        half = 0.5 * self.length
        return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)

    def contains(self, space: ConfigSpace, config: Configuration, tol: float = 1e-9) -> bool:
        if self.center is None:
            return False
        lower, upper = self.box(space)
        u = encode_matrix([config], space, _SCHEME)[0]
        return bool(np.all(u >= lower - tol) and np.all(u <= upper + tol))


class TurboOptimizer(Optimizer):
    """
    Trust-region optimizer. Suggest remembers which region proposed each
    configuration so that observe credits the proposer, even where boxes overlap.
    """

    kind = OptimizerKind.TURBO

    def __init__(self, settings: TunerSettings):
        self.regions: List[TrustRegionState] = [
            TrustRegionState(region_id=i, length=settings.turbo_length_init) for i in range(settings.turbo_regions)
        ]
        self.initialized = False
        self.proposed_by: Dict[tuple, int] = {}

    # state updates

    def _initialize(self, session: "TuningSession") -> None:
        """Seed every region from the shared init design, centered on distinct best points."""
        configs, values = training_data(session.history)
        scores = values * session.sense.sign
        order = np.argsort(scores, kind="stable")
        centers: List[int] = []
        seen = set()
        for i in order:
            key = session.space.config_key(configs[i])
            if key not in seen:
                seen.add(key)
                centers.append(int(i))
        for r, region in enumerate(self.regions):
            best = centers[r % len(centers)]
            region.center = configs[best]
            region.best_value = float(scores[best])
            region.members = list(range(len(configs)))
            self._refit(session, region)
        self.initialized = True
        logger.debug(f"turbo: initialized {len(self.regions)} trust regions")

    def _owner(self, session: "TuningSession", config: Configuration) -> TrustRegionState:
        """Region credited with an observation: its proposer, else the tightest box holding it"""
        key = session.space.config_key(config)
        if key in self.proposed_by:
            return self.regions[self.proposed_by.pop(key)]
        for region in self.regions:
            if region.pending and session.space.config_key(region.pending[0]) == key:
                return region
        inside = [r for r in self.regions if not r.pending and r.contains(session.space, config)]
        if inside:
            return min(inside, key=lambda r: (r.length, r.region_id))
        u = encode_matrix([config], session.space, _SCHEME)[0]
        candidates = [r for r in self.regions if r.center is not None] or self.regions
        return min(
            candidates,
            key=lambda r: (
                float(np.linalg.norm(encode_matrix([r.center], session.space, _SCHEME)[0] - u))
                if r.center is not None else math.inf,
                r.region_id,
            ),
        )

    def _restart(self, session: "TuningSession", region: TrustRegionState) -> None:
        region.restarts += 1
        seed = int(np.random.default_rng([session.seed, region.region_id, region.restarts]).integers(2 ** 31 - 1))
        region.pending = lhs_sample(session.space, session.n_init, seed)
        region.length = session.settings.turbo_length_init
        region.success_count = region.failure_count = 0
        region.best_value = math.inf
        region.center = None
        region.members = []
        region.hypers = None
        region.hypers_fitted_at = 0
        logger.info(f"turbo: region {region.region_id} collapsed; restart #{region.restarts} from LHS")

    def _refit(self, session: "TuningSession", region: TrustRegionState) -> None:
        settings = session.settings
        n = len(region.members)
        if n < 2:
            return
        due = (
            region.hypers is None
            or n <= settings.hyper_refit_every_iter_until
            or n - region.hypers_fitted_at >= settings.hyper_refit_period
        )
        if not due:
            return
        X, y = self._region_data(session, region)
        region.hypers = gp_fit_hypers(
            X, y, KernelFamily.RBF, get_layout(session.space, _SCHEME),
            seed=session.seed + 7919 * region.region_id + n, settings=settings,
        )
        region.hypers_fitted_at = n

    def _region_data(self, session: "TuningSession", region: TrustRegionState) -> Tuple[np.ndarray, np.ndarray]:
        configs, values = training_data(session.history)
        X = encode_matrix([configs[i] for i in region.members], session.space, _SCHEME)
        y = values[region.members] * session.sense.sign
        return X, y

    def observe(self, session: "TuningSession", observation: Observation) -> None:
        n = len(session.history)
        if not self.initialized:
            if n >= session.n_init and any(r.ok for r in session.history):
                self._initialize(session)
            return

        settings = session.settings
        region = self._owner(session, observation.config)
        self.proposed_by.clear()
        _, values = training_data(session.history)
        value = float(values[-1] * session.sense.sign)
        region.members.append(n - 1)

        if region.pending:
            region.pending.pop(0)
            if value < region.best_value:
                region.best_value, region.center = value, observation.config
            self._refit(session, region)
            return

        improved = value < region.best_value - 1e-3 * abs(region.best_value)
        region.update(improved, settings)
        if value < region.best_value:
            region.best_value, region.center = value, observation.config
        if region.needs_restart(settings):
            self._restart(session, region)
        else:
            self._refit(session, region)

    # suggestion

    def region_candidates(
        self, session: "TuningSession", region: TrustRegionState, rng: np.random.Generator
    ) -> List[Configuration]:
        lower, upper = region.box(session.space)
        n = session.settings.turbo_candidates
        U = lower + (upper - lower) * rng.uniform(size=(n, len(lower)))
        return decode_matrix(U, session.space, _SCHEME)

    def suggest(self, session: "TuningSession", rng: np.random.Generator) -> Configuration:
        if not self.initialized:
            return random_config(session, rng)
        for region in self.regions:
            if region.pending:
                return region.pending[0]

        best: Optional[Tuple[float, int, Configuration]] = None
        for region in self.regions:
            if region.center is None or not region.members:
                continue
            candidates = self.region_candidates(session, region, rng)
            X, y = self._region_data(session, region)
            layout = get_layout(session.space, _SCHEME)
            kernel, noise = region.hypers or (kernel_for_layout(KernelFamily.RBF, layout), 1e-6)
            try:
                model = gp_fit(X, y, kernel, noise, session.settings)
                sample = gp_posterior_samples(
                    model, encode_matrix(candidates, session.space, _SCHEME), rng, 1, session.settings
                )[0]
            except ModelFitError as e:
                logger.warning(f"turbo: region {region.region_id} GP failed ({e}); sampling uniformly in box")
                sample = rng.uniform(size=len(candidates))
            j = int(np.argmin(sample))
            if best is None or sample[j] < best[0]:
                best = (float(sample[j]), region.region_id, candidates[j])

        if best is None:
            return random_config(session, rng)
        config = session.space.validate(best[2])
        self.proposed_by[session.space.config_key(config)] = best[1]
        return config
