from .model import (
    DIVERGENCE_BOUND,
    BatchRollout,
    Dimensions,
    ModelParams,
    Trajectory,
    deadzone,
    deadzone_derivative,
    simulate,
    simulate_batch,
    step,
)

__all__ = [
    "DIVERGENCE_BOUND",
    "BatchRollout",
    "Dimensions",
    "ModelParams",
    "Trajectory",
    "deadzone",
    "deadzone_derivative",
    "simulate",
    "simulate_batch",
    "step",
]
