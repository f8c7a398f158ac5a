"""
Configuration-level surrogates: fitted GP or forest models behind one
predict(configs) -> (mean, variance) interface
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np

from config.settings import TunerSettings, get_tuner_settings

from ..models.history_models import Sense
from ..models.space_models import ConfigSpace, Configuration, EncodingScheme
from ..space.space_service import encode_matrix, get_layout
from .forest_service import ForestModel, ForestParams, oob_predict, rf_fit, rf_predict_batch
from .gp_service import GPModel, gp_fit, gp_fit_hypers, gp_loo, gp_predict_batch
from .kernels import Kernel, KernelFamily, kernel_for_layout

logger = logging.getLogger(__name__)

Hypers = Tuple[Kernel, float]


class SurrogateFamily(str, Enum):
    """Surrogate model families used by the optimizers and transfer"""
    GP_RBF_UNIT = "gp_rbf_unit"
    GP_RBF_ONEHOT = "gp_rbf_onehot"
    GP_MIXED = "gp_mixed"
    FOREST = "forest"

    @property
    def scheme(self) -> EncodingScheme:
        return {
            SurrogateFamily.GP_RBF_UNIT: EncodingScheme.UNIT,
            SurrogateFamily.GP_RBF_ONEHOT: EncodingScheme.UNIT_ONEHOT,
            SurrogateFamily.GP_MIXED: EncodingScheme.UNIT_ONEHOT,
            SurrogateFamily.FOREST: EncodingScheme.RAW,
        }[self]

    @property
    def kernel_family(self) -> Optional[KernelFamily]:
        if self == SurrogateFamily.FOREST:
            return None
        return KernelFamily.MIXED if self == SurrogateFamily.GP_MIXED else KernelFamily.RBF


class ConfigSurrogate(Protocol):
    def predict(self, configs: Sequence[Configuration]) -> Tuple[np.ndarray, np.ndarray]:
        ...

    def loo_predict(self) -> Tuple[np.ndarray, np.ndarray]:
        ...


@dataclass(frozen=True)
class GPSurrogate:
    space: ConfigSpace
    scheme: EncodingScheme
    model: GPModel

    def predict(self, configs: Sequence[Configuration]) -> Tuple[np.ndarray, np.ndarray]:
        return gp_predict_batch(self.model, encode_matrix(configs, self.space, self.scheme))

    def loo_predict(self) -> Tuple[np.ndarray, np.ndarray]:
        return gp_loo(self.model)


@dataclass(frozen=True)
class ForestSurrogate:
    space: ConfigSpace
    model: ForestModel

    def predict(self, configs: Sequence[Configuration]) -> Tuple[np.ndarray, np.ndarray]:
        return rf_predict_batch(self.model, encode_matrix(configs, self.space, EncodingScheme.RAW))

    def loo_predict(self) -> Tuple[np.ndarray, np.ndarray]:
        # out-of-bag predictions stand in for leave-one-out
        return oob_predict(self.model)


def fit_surrogate(
    family: SurrogateFamily,
    space: ConfigSpace,
    configs: Sequence[Configuration],
    values: np.ndarray,
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
    hypers: Optional[Hypers] = None,
) -> ConfigSurrogate:
    """Fit a surrogate of the given family on (configs, values)"""
    settings = settings or get_tuner_settings()
    family = SurrogateFamily(family)
    X = encode_matrix(configs, space, family.scheme)
    y = np.asarray(values, dtype=float)
    layout = get_layout(space, family.scheme)

    if family == SurrogateFamily.FOREST:
        params = ForestParams.from_settings(settings, seed=seed)
        return ForestSurrogate(space, rf_fit(X, y, params, layout.categorical_mask))

    if hypers is None:
        if len(y) >= 2:
            hypers = gp_fit_hypers(X, y, family.kernel_family, layout, seed=seed, settings=settings)
        else:
            hypers = (kernel_for_layout(family.kernel_family, layout), 1e-6)
    kernel, noise = hypers
    return GPSurrogate(space, family.scheme, gp_fit(X, y, kernel, noise, settings))


def standardized_objective(values: np.ndarray, sense: Sense) -> np.ndarray:
    """Minimization-oriented targets with zero mean and unit variance"""
    y = np.asarray(values, dtype=float) * Sense(sense).sign
    if len(y) == 0:
        return y
    scale = float(np.std(y))
    return (y - float(np.mean(y))) / (scale if scale > 0 else 1.0)
