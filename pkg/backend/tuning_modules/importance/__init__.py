"""Knob importance exports"""
from .fanova import fanova_fractions, leaf_partition, tree_variance_fractions
from .importance_service import (
    ScheduleKind,
    ablation_importance,
    compute_importance,
    fanova_importance,
    gini_importance,
    incremental_schedule,
    iou_topk,
    lasso_importance,
    load_report,
    ranking_stability,
    save_report,
    shap_importance,
    shapley_values,
    topk,
)

__all__ = [
    "ScheduleKind",
    "ablation_importance",
    "compute_importance",
    "fanova_fractions",
    "fanova_importance",
    "gini_importance",
    "incremental_schedule",
    "iou_topk",
    "lasso_importance",
    "leaf_partition",
    "load_report",
    "ranking_stability",
    "save_report",
    "shap_importance",
    "shapley_values",
    "topk",
    "tree_variance_fractions",
]
