"""
Configuration package exports
"""
from .settings import (
    AppSettings,
    TunerSettings,
    app_settings,
    get_tuner_settings,
    load_tuner_settings,
    setup_logging,
)

__all__ = [
    "AppSettings",
    "TunerSettings",
    "app_settings",
    "get_tuner_settings",
    "load_tuner_settings",
    "setup_logging",
]
