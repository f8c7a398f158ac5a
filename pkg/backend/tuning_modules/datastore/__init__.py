"""Datastore module exports"""
from .tabular_store import (
    frame_to_training_set,
    load_training_set,
    read_trajectory,
    read_training_frame,
    trajectory_frame,
    write_trajectory,
)

__all__ = [
    "frame_to_training_set",
    "load_training_set",
    "read_trajectory",
    "read_training_frame",
    "trajectory_frame",
    "write_trajectory",
]
