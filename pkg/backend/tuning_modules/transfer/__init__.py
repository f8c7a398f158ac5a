"""Transfer module exports"""
from .transfer_service import (
    NOT_SURPASSED,
    BaseTask,
    EnsembleModel,
    SourceTask,
    TransferContext,
    TransferMode,
    build_base_task,
    load_source_archive,
    misranked_pairs,
    ranking_loss,
    rgpe_predict,
    rgpe_weights,
    steps_to_best,
    steps_to_reach,
    transfer_pe,
    transfer_speedup,
    workload_map,
)

__all__ = [
    "NOT_SURPASSED",
    "BaseTask",
    "EnsembleModel",
    "SourceTask",
    "TransferContext",
    "TransferMode",
    "build_base_task",
    "load_source_archive",
    "misranked_pairs",
    "ranking_loss",
    "rgpe_predict",
    "rgpe_weights",
    "steps_to_best",
    "steps_to_reach",
    "transfer_pe",
    "transfer_speedup",
    "workload_map",
]
