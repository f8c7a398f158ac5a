"""
Configuration module for the knob tuning toolkit.
Process-level settings come from the environment; algorithm constants come
from defaults or an explicit JSON settings file so that runs stay reproducible.
"""
import json
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class AppSettings(BaseSettings):
    """Process-level settings loaded from environment variables or .env."""

    model_config = SettingsConfigDict(env_prefix="KNOBTUNE_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    log_file: Optional[str] = None


class TunerSettings(BaseModel):
    """Algorithm constants shared by every tuning component."""

    # session protocol
    n_init: int = Field(10, ge=1, description="LHS configurations executed before model-based search")
    failure_sentinel: float = Field(1e18, gt=0, description="Magnitude substituted for failures before any success")

    # gaussian process
    jitter_ladder: list[float] = Field(default_factory=lambda: [1e-10, 1e-9, 1e-8, 1e-7, 1e-6])
    hyper_restarts: int = Field(5, ge=5)
    hyper_max_evals: int = Field(200, ge=10, description="Objective evaluations per hyperparameter restart")
    hyper_refit_every_iter_until: int = Field(100, ge=1)
    hyper_refit_period: int = Field(5, ge=1)

    # random forest
    forest_trees: int = Field(100, ge=1)
    forest_min_samples_leaf: int = Field(1, ge=1)
    forest_max_depth: Optional[int] = None
    forest_feature_fraction: float = Field(5.0 / 6.0, gt=0, le=1)
    forest_bootstrap: bool = True

    # acquisition maximization
    acq_random_candidates: int = Field(1000, ge=1)
    acq_local_starts: int = Field(10, ge=0)
    acq_local_step: float = Field(0.05, gt=0)
    acq_plateau_limit: int = Field(20, ge=1)
    acq_local_budget: int = Field(50, ge=0, description="Max local-search moves per start")

    # smac
    smac_random_interleave: int = Field(2, ge=1, description="Every n-th suggestion is uniform random")

    # tpe
    tpe_gamma: float = Field(0.25, gt=0, lt=1)
    tpe_candidates: int = Field(24, ge=1)
    tpe_bandwidth_floor: float = Field(1e-3, gt=0)

    # turbo
    turbo_regions: int = Field(3, ge=1)
    turbo_length_init: float = 0.8
    turbo_length_min: float = 2.0 ** -6
    turbo_length_max: float = 1.6
    turbo_success_tolerance: int = 3
    turbo_failure_tolerance: int = 5
    turbo_candidates: int = Field(500, ge=1)

    # genetic algorithm
    ga_population: int = Field(20, ge=2)
    ga_mutation_prob: float = Field(0.1, ge=0, le=1)
    ga_mutation_step: float = Field(0.1, gt=0)

    # importance
    shap_exact_max_knobs: int = Field(12, ge=1)
    shap_permutations: int = Field(200, ge=1)
    importance_trees: int = Field(50, ge=1)
    importance_min_samples_leaf: int = Field(3, ge=1)
    ablation_max_targets: int = Field(100, ge=1, description="Best better-than-default targets traced by ablation")
    shap_max_observations: int = Field(500, ge=1, description="Observations explained by SHAP, subsampled beyond this")
    lasso_alphas: int = Field(100, ge=2)

    # transfer
    rgpe_samples: int = Field(100, ge=1)

    # benchsuite
    cv_folds: int = Field(10, ge=2)
    cv_search_draws: int = Field(20, ge=1)


# Global application settings instance
app_settings = AppSettings()

_tuner_settings = TunerSettings()


def get_tuner_settings() -> TunerSettings:
    """Get the active algorithm settings."""
    return _tuner_settings


def load_tuner_settings(path: Optional[Union[str, Path]] = None) -> TunerSettings:
    """Load algorithm settings from a JSON override file and make them active."""
    global _tuner_settings
    if path is None:
        _tuner_settings = TunerSettings()
    else:
        with open(path, "r") as f:
            _tuner_settings = TunerSettings(**json.load(f))
    return _tuner_settings


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """Setup console logging plus an optional append-mode log file."""
    level_name = (level or app_settings.log_level).upper()
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    target = log_file or app_settings.log_file
    if target:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(target, mode="a"))
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s %(levelname)s: %(message)s",
        handlers=handlers,
        force=True,
    )
