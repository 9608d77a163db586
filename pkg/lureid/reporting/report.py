import dataclasses
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from lureid.certificate.certificate import Certificate, check_certificate
from lureid.metrics.metrics import is_diverging, nrmse
from lureid.model.model import ModelParams, Trajectory, simulate_batch
from lureid.sector.sector import boundary_frame, polytope_segments_2d
from lureid.trainer.bptt import TrajectoryBatch
from lureid.trainer.parameters import MODES, count_parameters
from lureid.utils.exceptions import ConfigurationError, DatasetValidationError, DimensionalityError
from lureid.utils.io import write_json

logger = logging.getLogger(__name__)

EVAL_REPORT_SCHEMA_VERSION = 1

SUMMARY_COLUMNS = [
    "mode",
    "nrmse",
    "certificate",
    "delta",
    "theta",
    "trainable",
    "n_trajectories",
    "diverged_truth",
    "diverged_pred",
]


@dataclass
class Predictions:
    """Simulated outputs and states of a model on the initial states and inputs of a dataset.

    Args:
        batch (TrajectoryBatch): the padded dataset
        x (np.ndarray): predicted states, shape (b, N, n)
        y (np.ndarray): predicted outputs, shape (b, N, e)
        alive (np.ndarray): False from the step at which a prediction hit the guard, shape (b, N)
        guard_hit (np.ndarray): per trajectory, the prediction hit the divergence guard on a measured step
        diverged_truth (np.ndarray): per trajectory, the measured output diverges
        diverged_pred (np.ndarray): per trajectory, the prediction diverges
    """

    batch: TrajectoryBatch
    x: np.ndarray
    y: np.ndarray
    alive: np.ndarray
    guard_hit: np.ndarray
    diverged_truth: np.ndarray
    diverged_pred: np.ndarray

    def trajectories(self) -> List[Trajectory]:
        """Predicted Trajectory objects with states, truncated where the guard fired."""
        out = []
        for i in range(len(self.batch)):
            valid = self.batch.mask[i] & self.alive[i]
            end = int(valid.sum())
            out.append(
                Trajectory(
                    x0=self.batch.x0[i],
                    u=self.batch.u[i, :end],
                    y=self.y[i, :end],
                    x=self.x[i, :end],
                    diverged=bool(self.diverged_pred[i]),
                    diverged_at=end if self.guard_hit[i] else None,
                )
            )
        return out


def _trajectories(dataset) -> List[Trajectory]:
    trajectories = list(getattr(dataset, "trajectories", dataset))
    if not trajectories:
        raise ConfigurationError("the dataset holds no trajectories")
    return trajectories


def predict(params: ModelParams, dataset) -> Predictions:
    """Simulate a model from the initial states of a dataset under its inputs.

    Args:
        params (ModelParams): the model
        dataset: a Dataset, or a list of Trajectory objects

    Returns:
        Predictions
    """
    trajectories = _trajectories(dataset)
    batch = TrajectoryBatch.from_trajectories(trajectories)
    if batch.x0.shape[1] != params.dims.n or batch.u.shape[2] != params.dims.r or batch.y.shape[2] != params.dims.e:
        raise DimensionalityError(f"model dimensions {params.dims} do not match the data")
    rollout = simulate_batch(params, batch.x0, batch.u)
    guard_hit = (batch.mask & ~rollout.alive).any(axis=1)
    truth = np.array([bool(t.diverged) or is_diverging(t.y) for t in trajectories], dtype=bool)
    pred = np.array(
        [is_diverging(rollout.y[i, batch.mask[i]], guard_hit=guard_hit[i]) for i in range(len(batch))], dtype=bool
    )
    return Predictions(
        batch=batch,
        x=rollout.x,
        y=rollout.y,
        alive=rollout.alive,
        guard_hit=guard_hit,
        diverged_truth=truth,
        diverged_pred=pred,
    )


@dataclass
class EvalReport:
    """Evaluation of one trained model on a dataset.

    `consistency` counts trajectories by (truth diverges, prediction diverges) and
    always sums to `n_trajectories`.

    Args:
        mode (str): training mode of the model
        nrmse (float): NRMSE over all measured steps; inf when a prediction hit the divergence guard
        certificate (str): "feasible", "infeasible", or "none" for nosec
        delta (float): input bound the certificate was checked against
        semi_axes (list): semi-axes of the certified region, largest first, or None
        n_trajectories (int): number of trajectories
        diverged_truth (int): trajectories whose measured output diverges
        diverged_pred (int): trajectories whose prediction diverges
        consistency (dict): counts for "both", "truth_only", "pred_only" and "neither"
        theta (int): number of model parameters
        trainable (int): number of trained variables in the mode
    """

    mode: str
    nrmse: float
    certificate: str
    delta: float
    semi_axes: Optional[List[float]]
    n_trajectories: int
    diverged_truth: int
    diverged_pred: int
    consistency: Dict[str, int]
    theta: int
    trainable: int

    def as_dict(self) -> dict:
        """JSON-ready representation; a non-finite NRMSE is written as null."""
        doc = dataclasses.asdict(self)
        doc["nrmse"] = self.nrmse if np.isfinite(self.nrmse) else None
        return {"schema_version": EVAL_REPORT_SCHEMA_VERSION, **doc}

    def save_json(self, path) -> None:
        """Write as_dict() as JSON."""
        write_json(self.as_dict(), path)


def certificate_status(params: ModelParams, cert: Optional[Certificate], delta: float, mode: str) -> str:
    """Status label: none for nosec or a missing certificate, otherwise feasible or infeasible."""
    if mode == "nosec" or cert is None:
        return "none"
    return "feasible" if check_certificate(params, cert, delta).passed else "infeasible"


def evaluate(
    params: ModelParams,
    cert: Optional[Certificate],
    dataset,
    mode: str = "gensec",
    delta: Optional[float] = None,
    predictions: Optional[Predictions] = None,
) -> EvalReport:
    """Score a model on a dataset and check its certificate.

    Example:

    ```python
    from lureid.datasets import GenConfig, generate, true_system
    from lureid.reporting import evaluate

    data = generate(GenConfig(n_sin=2, n_noise=2, n_sin_zero=1, n_noise_zero=1, seed=1))
    report = evaluate(true_system(), None, data, mode="nosec")
    assert report.nrmse < 1e-12 and report.certificate == "none"
    assert sum(report.consistency.values()) == len(data)
    ```

    Args:
        params (ModelParams): the model
        cert (Certificate): its certificate, None for nosec
        dataset: a Dataset, or a list of Trajectory objects
        mode (str): training mode, one of gensec, stdsec, nosec
        delta (float): input bound; defaults to the dataset's delta
        predictions (Predictions): reuse an earlier predict() of the same model and data

    Returns:
        EvalReport
    """
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    trajectories = _trajectories(dataset)
    if delta is None:
        delta = getattr(dataset, "delta", None)
    if delta is None:
        delta = float(max(np.max(np.abs(t.u)) for t in trajectories))
    pred = predictions if predictions is not None else predict(params, trajectories)

    mask = pred.batch.mask
    if pred.guard_hit.any():
        logger.warning(f"{int(pred.guard_hit.sum())} predictions hit the divergence guard; NRMSE is infinite")
        score = float("inf")
    else:
        try:
            score = nrmse(pred.y[mask], pred.batch.y[mask])
        except ValueError as e:
            raise DatasetValidationError(f"cannot score against this dataset: {e}") from e

    status = certificate_status(params, cert, delta, mode)
    semi_axes = None
    if cert is not None and mode != "nosec":
        try:
            semi_axes = [float(a) for a in cert.region().semi_axes()]
        except (ValueError, np.linalg.LinAlgError):
            semi_axes = None

    truth, predicted = pred.diverged_truth, pred.diverged_pred
    counts = count_parameters(mode, params.dims)
    return EvalReport(
        mode=mode,
        nrmse=float(score),
        certificate=status,
        delta=float(delta),
        semi_axes=semi_axes,
        n_trajectories=len(trajectories),
        diverged_truth=int(truth.sum()),
        diverged_pred=int(predicted.sum()),
        consistency={
            "both": int(np.sum(truth & predicted)),
            "truth_only": int(np.sum(truth & ~predicted)),
            "pred_only": int(np.sum(~truth & predicted)),
            "neither": int(np.sum(~truth & ~predicted)),
        },
        theta=counts["theta"],
        trainable=counts["trainable"],
    )


def phase_table(predictions: Predictions) -> pd.DataFrame:
    """Predicted state trajectories in long format.

    Columns are traj_id, k, x1..xn, diverged_truth, diverged_pred; one row per measured
    step that the prediction reached.
    """
    batch = predictions.batch
    n = batch.x0.shape[1]
    state_columns = [f"x{j + 1}" for j in range(n)]
    frames = []
    for i in range(len(batch)):
        valid = batch.mask[i] & predictions.alive[i]
        k = np.flatnonzero(valid)
        frame = pd.DataFrame(predictions.x[i, k], columns=state_columns)
        frame.insert(0, "k", k)
        frame.insert(0, "traj_id", i)
        frame["diverged_truth"] = bool(predictions.diverged_truth[i])
        frame["diverged_pred"] = bool(predictions.diverged_pred[i])
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def region_table(cert: Certificate, count: int = 200) -> pd.DataFrame:
    """Boundary of the certified region E(P^-1 / s^2), columns phi, x1, x2."""
    return boundary_frame(cert.region(), count=count)


def region_bounds(cert: Certificate, margin: float = 1.5) -> tuple:
    """Box around the certified region, enlarged by `margin`, as (x1_min, x1_max, x2_min, x2_max)."""
    if cert.n != 2:
        raise DimensionalityError(f"region export supports n = 2 only, got n = {cert.n}")
    # the support of E(X) along e_j is sqrt((X^-1)_jj) = s sqrt(P_jj)
    half = margin * cert.s * np.sqrt(np.diag(cert.P))
    return (-half[0], half[0], -half[1], half[1])


def polytope_table(cert: Certificate, bounds=None) -> pd.DataFrame:
    """Edges of the polytope L(H) of a certificate, columns edge_id, x1, x2.

    Without bounds the lines are clipped to region_bounds(cert).
    """
    return polytope_segments_2d(cert.polytope(), bounds if bounds is not None else region_bounds(cert))


def summary_table(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """One row per evaluated model, in the order given."""
    rows = [{column: getattr(report, column) for column in SUMMARY_COLUMNS} for report in reports]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
