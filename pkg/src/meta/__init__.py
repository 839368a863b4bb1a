"""
Meta-learning engine for Facet.

Components:
- MetaConfig / mining_stage: training settings and the two-stage triplet schedule
- inner_update, meta_test_losses, meta_step: one fine-grained meta step
- train: the full training loop with checkpoints and resume
- TrainingLog: line-delimited training records
"""

from .engine import (
    MetaConfig,
    MetaStepReport,
    build_optimizer,
    group_grad_norms,
    inner_update,
    meta_objective,
    meta_step,
    meta_test_losses,
    mining_stage,
)
from .training_log import TrainingLog, TrainingRecord
from .trainer import TrainResult, train

__all__ = [
    "MetaConfig",
    "MetaStepReport",
    "build_optimizer",
    "group_grad_norms",
    "inner_update",
    "meta_objective",
    "meta_step",
    "meta_test_losses",
    "mining_stage",
    "TrainingLog",
    "TrainingRecord",
    "TrainResult",
    "train",
]
