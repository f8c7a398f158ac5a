"""
Benchmark, experiment-plan and report documents
"""
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .history_models import Sense
from .session_models import OptimizerKind


class SurrogateKind(str, Enum):
    """Candidate benchmark surrogates"""
    RF = "rf"
    KNN = "knn"
    RIDGE = "ridge"


class CandidateScore(BaseModel):
    kind: SurrogateKind
    rmse: float = Field(..., ge=0, description="Mean cross-validated RMSE of the best draw")
    r2: float = Field(..., description="Mean per-fold R² of the best draw")
    params: Dict[str, Any] = Field(default_factory=dict, description="Best hyperparameter draw")


class ModelSelectionResult(BaseModel):
    winner: SurrogateKind
    folds: int = Field(..., ge=2)
    candidates: List[CandidateScore]

    def score_of(self, kind: SurrogateKind) -> CandidateScore:
        return next(c for c in self.candidates if c.kind == SurrogateKind(kind))


class BenchmarkDocument(BaseModel):
    """Serialized tuning benchmark: one JSON file"""
    model_config = ConfigDict(extra="forbid")

    space: Dict[str, Any] = Field(..., description="Space document")
    surrogate_kind: SurrogateKind = SurrogateKind.RF
    forest: Optional[Dict[str, Any]] = Field(None, description="Serialized forest surrogate")
    model: Optional[Dict[str, Any]] = Field(None, description="Serialized knn or ridge surrogate")
    log_target: bool = Field(False, description="Surrogate was fitted on log performance")
    sense: Sense
    default_config: Dict[str, Any]
    default_value: float
    provenance: Dict[str, Any] = Field(default_factory=dict)


class ExperimentPlan(BaseModel):
    """Optimizer tournament against one benchmark"""
    model_config = ConfigDict(extra="forbid")

    benchmark_path: str = Field(..., min_length=1)
    optimizers: List[OptimizerKind] = Field(..., min_length=1)
    budget: int = Field(..., ge=1, description="Evaluations per session")
    seeds: List[int] = Field(..., min_length=1, description="One session per optimizer and seed")
    out_dir: str = Field(..., min_length=1)
    n_init: Optional[int] = Field(None, ge=1)

    @field_validator("seeds")
    @classmethod
    def _distinct_seeds(cls, seeds: List[int]) -> List[int]:
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        return seeds


class RankingTable(BaseModel):
    mean_rank: Dict[str, float] = Field(..., description="Optimizer to rank averaged over session rounds")
    round_ranks: List[Dict[str, float]] = Field(..., description="Ranks per round, best sessions first")
    quartiles: Dict[str, List[float]] = Field(
        default_factory=dict, description="Optimizer to [q25, median, q75] of session bests"
    )


class OptimizerSummary(BaseModel):
    best_value: float
    session_bests: List[float]
    improvement_percent: Optional[float] = None
    mean_rank: float


class TransferSummary(BaseModel):
    baseline: str = Field(..., description="Optimizer label of the sessions without transfer")
    performance_enhancement: Dict[int, float] = Field(..., description="Seed to (best_with - best_without) / best_without")
    speedup: Dict[int, Any] = Field(..., description="Seed to steps speedup, or the not-surpassed marker")


class SummaryReport(BaseModel):
    benchmark: Dict[str, Any] = Field(default_factory=dict, description="Benchmark provenance")
    sense: Sense
    default_value: Optional[float] = None
    budget: int
    optimizers: Dict[str, OptimizerSummary]
    ranking: RankingTable
    transfer: Dict[str, TransferSummary] = Field(default_factory=dict, description="Transfer label to its metrics")
