"""
Exception hierarchy for the knob tuning toolkit
"""
from typing import Optional


class TuningError(Exception):
    """Base error for every failure the toolkit reports to its callers"""


class SpaceError(TuningError):
    """Malformed space document or a configuration outside its space"""

    def __init__(self, message: str, knob: Optional[str] = None):
        self.knob = knob
        super().__init__(f"knob '{knob}': {message}" if knob else message)


class ModelFitError(TuningError):
    """Surrogate could not be fitted (conditioning failure, degenerate input)"""


class InsufficientDataError(TuningError):
    """Too few observations for the requested computation"""


class SessionError(TuningError):
    """Invalid tuning session parameters or state"""


class BudgetExhaustedError(SessionError):
    """Suggest called after the session budget was used up"""


class TransferError(TuningError):
    """Invalid source tasks or transfer inputs"""


class BenchmarkError(TuningError):
    """Benchmark artifact, dataset or experiment plan problems"""


class ObjectiveError(TuningError):
    """External objective could not produce a value"""
