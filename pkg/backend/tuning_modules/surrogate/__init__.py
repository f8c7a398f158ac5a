"""Surrogate module exports"""
from .adapters import (
    ConfigSurrogate,
    ForestSurrogate,
    GPSurrogate,
    SurrogateFamily,
    fit_surrogate,
    standardized_objective,
)
from .forest_service import (
    ForestModel,
    ForestParams,
    RegressionTree,
    forest_from_dict,
    forest_to_dict,
    oob_predict,
    per_tree_predictions,
    rf_fit,
    rf_predict,
    rf_predict_batch,
    split_counts,
)
from .gp_service import (
    GPModel,
    gp_fit,
    gp_fit_hypers,
    gp_loo,
    gp_posterior_samples,
    gp_predict,
    gp_predict_batch,
    log_marginal_likelihood,
)
from .kernels import (
    Kernel,
    KernelFamily,
    KernelVariant,
    hamming_kernel,
    kernel_eval,
    kernel_for_layout,
    kernel_matrix,
    matern52_kernel,
    product_kernel,
    rbf_kernel,
)
from .parzen_service import ParzenPair, sample_good, tpe_fit, tpe_score, tpe_score_batch

__all__ = [
    "ConfigSurrogate",
    "ForestModel",
    "ForestParams",
    "ForestSurrogate",
    "GPModel",
    "GPSurrogate",
    "Kernel",
    "KernelFamily",
    "KernelVariant",
    "ParzenPair",
    "RegressionTree",
    "SurrogateFamily",
    "fit_surrogate",
    "forest_from_dict",
    "forest_to_dict",
    "gp_fit",
    "gp_fit_hypers",
    "gp_loo",
    "gp_posterior_samples",
    "gp_predict",
    "gp_predict_batch",
    "hamming_kernel",
    "kernel_eval",
    "kernel_for_layout",
    "kernel_matrix",
    "log_marginal_likelihood",
    "matern52_kernel",
    "oob_predict",
    "per_tree_predictions",
    "product_kernel",
    "rbf_kernel",
    "rf_fit",
    "rf_predict",
    "rf_predict_batch",
    "sample_good",
    "split_counts",
    "standardized_objective",
    "tpe_fit",
    "tpe_score",
    "tpe_score_batch",
]
