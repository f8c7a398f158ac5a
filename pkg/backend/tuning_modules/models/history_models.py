"""
Observation history models shared by optimizers, transfer and benchmarks
"""
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .space_models import Configuration


class Sense(str, Enum):
    """Optimization direction of the objective"""
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"

    @property
    def sign(self) -> float:
        """Multiplier turning the objective into a minimization problem."""
        return 1.0 if self == Sense.MINIMIZE else -1.0

    def is_better(self, a: float, b: float) -> bool:
        """True when a is strictly better than b."""
        return a < b if self == Sense.MINIMIZE else a > b

    def best(self, values: Sequence[float]) -> float:
        return float(min(values)) if self == Sense.MINIMIZE else float(max(values))

    def worst(self, values: Sequence[float]) -> float:
        return float(max(values)) if self == Sense.MINIMIZE else float(min(values))


class Status(str, Enum):
    OK = "ok"
    FAILED = "failed"


@dataclass(frozen=True)
class Observation:
    """One evaluated configuration (θ_i, y_i)."""

    config: Configuration
    value: float
    status: Status
    iteration: int
    metrics: Optional[Tuple[float, ...]] = None

    @property
    def ok(self) -> bool:
        return self.status == Status.OK


class History:
    """Append-only observation log H_t; indices are stable."""

    def __init__(self, sense: Sense, records: Optional[List[Observation]] = None):
        self.sense = Sense(sense)
        self._records: List[Observation] = list(records or [])

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self._records)

    def __getitem__(self, index: int) -> Observation:
        return self._records[index]

    @property
    def records(self) -> List[Observation]:
        return list(self._records)

    def append(self, observation: Observation) -> None:
        self._records.append(observation)

    def ok_records(self) -> List[Observation]:
        return [r for r in self._records if r.ok]

    def configs(self) -> List[Configuration]:
        return [r.config for r in self._records]

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self._records], dtype=float)

    def ok_values(self) -> np.ndarray:
        return np.array([r.value for r in self._records if r.ok], dtype=float)

    def copy(self) -> "History":
        return History(self.sense, self._records)


@dataclass(frozen=True)
class EvaluationResult:
    """Outcome of evaluating one configuration against an objective."""

    value: float
    status: Status = Status.OK
    metrics: Optional[Tuple[float, ...]] = None
    message: str = ""
