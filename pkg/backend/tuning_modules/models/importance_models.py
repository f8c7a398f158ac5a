"""
Knob-importance models
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..errors import InsufficientDataError
from .history_models import Sense
from .space_models import ConfigSpace, Configuration


class ImportanceMethod(str, Enum):
    """Importance measurements"""
    GINI = "gini"
    LASSO = "lasso"
    FANOVA = "fanova"
    ABLATION = "ablation"
    SHAP = "shap"


class ImportanceReport(BaseModel):
    method: ImportanceMethod
    scores: Dict[str, float] = Field(..., description="Knob name to importance score")
    ranking: List[str] = Field(..., description="Knob names by descending score, ties by name")

    @classmethod
    def from_scores(cls, method: ImportanceMethod, scores: Dict[str, float]) -> "ImportanceReport":
        ranking = sorted(scores, key=lambda name: (-scores[name], name))
        return cls(method=method, scores={k: float(v) for k, v in scores.items()}, ranking=ranking)


@dataclass
class TrainingSet:
    """Observation corpus used by importance measurements and benchmark builds."""

    space: ConfigSpace
    configs: List[Configuration]
    values: np.ndarray
    sense: Sense = Sense.MAXIMIZE
    default_config: Optional[Configuration] = None
    default_value: Optional[float] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.configs) != len(self.values):
            raise InsufficientDataError(
                f"{len(self.configs)} configurations but {len(self.values)} performance values"
            )
        if self.default_config is None:
            self.default_config = self.space.default_configuration()

    def __len__(self) -> int:
        return len(self.configs)
