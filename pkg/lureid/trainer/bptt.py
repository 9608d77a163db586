"""
Prediction error of a batch of trajectories and its gradient by backpropagation through time.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from lureid.model.model import BatchRollout, ModelParams, Trajectory, deadzone_derivative, simulate_batch
from lureid.utils.exceptions import DimensionalityError


@dataclass
class TrajectoryBatch:
    """Trajectories padded to a common length.

    Args:
        x0 (np.ndarray): initial states, shape (b, n)
        u (np.ndarray): inputs, shape (b, N, r), zero-padded
        y (np.ndarray): measured outputs, shape (b, N, e), zero-padded
        mask (np.ndarray): True on measured steps, shape (b, N)
    """

    x0: np.ndarray
    u: np.ndarray
    y: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_trajectories(cls, trajectories: Sequence[Trajectory]) -> "TrajectoryBatch":
        """Stack trajectories of possibly different lengths."""
        if len(trajectories) == 0:
            raise DimensionalityError("a batch needs at least one trajectory")
        b = len(trajectories)
        N = max(len(t) for t in trajectories)
        n, r, e = trajectories[0].x0.size, trajectories[0].u.shape[1], trajectories[0].y.shape[1]
        x0 = np.zeros((b, n))
        u = np.zeros((b, N, r))
        y = np.zeros((b, N, e))
        mask = np.zeros((b, N), dtype=bool)
        for i, traj in enumerate(trajectories):
            if traj.x0.size != n or traj.u.shape[1] != r or traj.y.shape[1] != e:
                raise DimensionalityError(f"trajectory {i} does not match the dimensions of trajectory 0")
            k = len(traj)
            x0[i] = traj.x0
            u[i, :k] = traj.u
            y[i, :k] = traj.y
            mask[i, :k] = True
        return cls(x0=x0, u=u, y=y, mask=mask)

    def __len__(self):
        """Number of trajectories."""
        return len(self.x0)

    def subset(self, index) -> "TrajectoryBatch":
        """Rows selected by an index array."""
        return TrajectoryBatch(x0=self.x0[index], u=self.u[index], y=self.y[index], mask=self.mask[index])


def _weights(batch: TrajectoryBatch, rollout: BatchRollout):
    """Per-step weights: 1 / (b N_i) on steps that are both measured and simulated."""
    valid = batch.mask & rollout.alive
    counts = np.maximum(valid.sum(axis=1), 1)
    return valid, 1.0 / (len(batch) * counts)


def prediction_loss(params: ModelParams, batch: TrajectoryBatch) -> float:
    """Mean over trajectories of the per-trajectory MSE over its valid prefix."""
    rollout = simulate_batch(params, batch.x0, batch.u)
    valid, weight = _weights(batch, rollout)
    sq = np.sum((rollout.y - batch.y) ** 2, axis=2) * valid
    return float(np.sum(sq.sum(axis=1) * weight))


def prediction_loss_gradient(params: ModelParams, batch: TrajectoryBatch):
    """prediction_loss and its gradient with respect to the eight system matrices.

    Returns:
        (loss, dict of gradients keyed by matrix name)
    """
    rollout = simulate_batch(params, batch.x0, batch.u)
    valid, weight = _weights(batch, rollout)
    residual = (rollout.y - batch.y) * valid[:, :, None]
    loss = float(np.sum(np.sum(residual**2, axis=(1, 2)) * weight))
    # dloss / dy_hat
    err = 2.0 * residual * weight[:, None, None]

    grad = {name: np.zeros_like(getattr(params, name)) for name in ("A", "B", "B2", "C", "D", "D12", "C2", "D21")}
    A, B2, C, C2, D12 = params.A, params.B2, params.C, params.C2, params.D12
    b, N, _ = batch.u.shape
    adjoint = np.zeros((b, params.dims.n))
    for k in range(N - 1, -1, -1):
        x, u, v, w, e = rollout.x[:, k], batch.u[:, k], rollout.v[:, k], rollout.w[:, k], err[:, k]
        # the step into a dead state carries no gradient
        if k + 1 < N:
            adjoint = adjoint * rollout.alive[:, k + 1, None]
        else:
            adjoint = np.zeros_like(adjoint)
        grad["C"] += e.T @ x
        grad["D"] += e.T @ u
        grad["D12"] += e.T @ w
        grad["A"] += adjoint.T @ x
        grad["B"] += adjoint.T @ u
        grad["B2"] += adjoint.T @ w
        dv = deadzone_derivative(v) * (e @ D12 + adjoint @ B2)
        grad["C2"] += dv.T @ x
        grad["D21"] += dv.T @ u
        adjoint = adjoint @ A + e @ C + dv @ C2
    return loss, grad
