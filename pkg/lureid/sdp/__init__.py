"""Semidefinite programs for restoration, initialization and region maximization."""

from .problem import SdpProblem, SdpSolution, SdpStatus, SolverSettings
from .programs import (
    feasibility_problem,
    feasibility_restore,
    initial_model,
    initial_scale,
    initialize,
    post_process,
    region_problem,
)

__all__ = [
    "SdpProblem",
    "SdpSolution",
    "SdpStatus",
    "SolverSettings",
    "feasibility_problem",
    "feasibility_restore",
    "initial_model",
    "initial_scale",
    "initialize",
    "post_process",
    "region_problem",
]
