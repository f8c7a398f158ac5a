"""
Knob tuning toolkit

This package tunes the knobs of a black-box system (a DBMS under a workload,
or a surrogate benchmark standing in for one):

- space/: configuration spaces, encodings, LHS and subspaces
- surrogate/: Gaussian-process, random-forest and Parzen models
- acquisition/: expected improvement and its maximization
- optimize/: ask/tell tuning sessions over eight optimizers
- importance/: knob-importance measurements and knob selection
- transfer/: workload mapping and ranking-weighted GP ensembles
- benchsuite/: surrogate benchmarks and optimizer tournaments
- datastore/: CSV trajectories and training data

Usage:
    python backend/run_tuner.py tune --space space.json --optimizer smac ...
"""

__version__ = "1.0.0"
