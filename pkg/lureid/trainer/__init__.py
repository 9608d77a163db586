"""Barrier-augmented training with certificate verification, restoration and rollback."""

from .barrier import barrier, barrier_gradient, barrier_terms, barrier_value
from .bptt import TrajectoryBatch, prediction_loss, prediction_loss_gradient
from .optimizer import AdamMoments, adam_update
from .parameters import MODES, Omega, count_parameters, trainable_blocks
from .trainer import (
    HISTORY_COLUMNS,
    TrainConfig,
    TrainResult,
    TrainState,
    adam_step,
    default_nosec_init,
    loss_gradient,
    train,
    training_loss,
)

__all__ = [
    "barrier",
    "barrier_gradient",
    "barrier_terms",
    "barrier_value",
    "TrajectoryBatch",
    "prediction_loss",
    "prediction_loss_gradient",
    "AdamMoments",
    "adam_update",
    "MODES",
    "Omega",
    "count_parameters",
    "trainable_blocks",
    "HISTORY_COLUMNS",
    "TrainConfig",
    "TrainResult",
    "TrainState",
    "adam_step",
    "default_nosec_init",
    "loss_gradient",
    "train",
    "training_loss",
]
