"""
Tuning-session models
"""
from enum import Enum


class OptimizerKind(str, Enum):
    """Optimizer families a tuning session can run"""
    VANILLA_BO = "vanilla_bo"
    ONEHOT_BO = "onehot_bo"
    MIXED_BO = "mixed_bo"
    SMAC = "smac"
    TPE = "tpe"
    TURBO = "turbo"
    GA = "ga"
    RANDOM = "random"

    @property
    def uses_gaussian_process(self) -> bool:
        return self in (OptimizerKind.VANILLA_BO, OptimizerKind.ONEHOT_BO, OptimizerKind.MIXED_BO)

    @property
    def supports_transfer(self) -> bool:
        return self.uses_gaussian_process or self == OptimizerKind.SMAC
