"""Acquisition module exports"""
from .acquisition_service import (
    AcquisitionKind,
    AcquisitionSpec,
    acquisition_values,
    expected_improvement,
    maximize_acquisition,
    one_exchange_neighbors,
)

__all__ = [
    "AcquisitionKind",
    "AcquisitionSpec",
    "acquisition_values",
    "expected_improvement",
    "maximize_acquisition",
    "one_exchange_neighbors",
]
