"""Optimize module exports"""
from .base import Optimizer, training_data
from .genetic_service import GeneticOptimizer, crossover, mutate, selection_weights
from .model_based import GaussianProcessOptimizer, RandomOptimizer, SmacOptimizer, TpeOptimizer
from .session_service import (
    TuningSession,
    best_so_far,
    best_so_far_curve,
    ga_suggest,
    handle_failure,
    mixed_bo_suggest,
    new_session,
    observe,
    onehot_bo_suggest,
    random_suggest,
    smac_suggest,
    suggest,
    tpe_suggest,
    turbo_suggest,
    vanilla_bo_suggest,
)
from .tune_service import Objective, evaluate_objective, tune
from .turbo_service import TrustRegionState, TurboOptimizer

__all__ = [
    "GaussianProcessOptimizer",
    "GeneticOptimizer",
    "Objective",
    "Optimizer",
    "RandomOptimizer",
    "SmacOptimizer",
    "TpeOptimizer",
    "TrustRegionState",
    "TuningSession",
    "TurboOptimizer",
    "best_so_far",
    "best_so_far_curve",
    "crossover",
    "evaluate_objective",
    "ga_suggest",
    "handle_failure",
    "mixed_bo_suggest",
    "mutate",
    "new_session",
    "observe",
    "onehot_bo_suggest",
    "random_suggest",
    "selection_weights",
    "smac_suggest",
    "suggest",
    "tpe_suggest",
    "training_data",
    "tune",
    "turbo_suggest",
    "vanilla_bo_suggest",
]
