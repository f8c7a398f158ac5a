"""
Combined imports for the tuning models
"""
from .benchmark_models import (
    BenchmarkDocument,
    CandidateScore,
    ExperimentPlan,
    ModelSelectionResult,
    OptimizerSummary,
    RankingTable,
    SummaryReport,
    SurrogateKind,
    TransferSummary,
)
from .history_models import EvaluationResult, History, Observation, Sense, Status
from .importance_models import ImportanceMethod, ImportanceReport, TrainingSet
from .run_models import RunConfig
from .session_models import OptimizerKind
from .space_models import (
    ConfigSpace,
    Configuration,
    EncodedVector,
    EncodingLayout,
    EncodingScheme,
    KnobKind,
    KnobSpec,
    KnobValue,
)

__all__ = [
    # Space models
    "ConfigSpace",
    "Configuration",
    "EncodedVector",
    "EncodingLayout",
    "EncodingScheme",
    "KnobKind",
    "KnobSpec",
    "KnobValue",
    # History models
    "EvaluationResult",
    "History",
    "Observation",
    "Sense",
    "Status",
    # Importance models
    "ImportanceMethod",
    "ImportanceReport",
    "TrainingSet",
    # Session and run models
    "OptimizerKind",
    "RunConfig",
    # Benchmark models
    "BenchmarkDocument",
    "CandidateScore",
    "ExperimentPlan",
    "ModelSelectionResult",
    "OptimizerSummary",
    "RankingTable",
    "SummaryReport",
    "SurrogateKind",
    "TransferSummary",
]
