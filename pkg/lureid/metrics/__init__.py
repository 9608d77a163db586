"""Prediction-error metrics and the divergence classifier."""

from .metrics import is_diverging, mse, nrmse

__all__ = ["is_diverging", "mse", "nrmse"]
