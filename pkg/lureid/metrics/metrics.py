import numpy as np

from lureid.utils.arrayfuncs import check_finite
from lureid.utils.exceptions import DimensionalityError


def _paired(y_hat, y):
    y_hat = np.asarray(y_hat, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_hat.ndim == 1:
        y_hat = y_hat.reshape(-1, 1)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if y_hat.shape != y.shape:
        raise DimensionalityError(f"y_hat has shape {y_hat.shape}, but y has shape {y.shape}")
    if len(y) < 1:
        raise DimensionalityError("sequences must contain at least one step")
    return y_hat, y


def mse(y_hat, y):
    """Mean over steps of the squared Euclidean prediction error.

    ```python
    from lureid.metrics import mse
    assert mse([[1.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]) == 1.0
    ```

    Args:
        y_hat: predicted outputs, shape (N, e); a 1d array is read as e = 1
        y: reference outputs, same shape

    Returns:
        float
    """
    y_hat, y = _paired(y_hat, y)
    return float(np.mean(np.sum((y_hat - y) ** 2, axis=1)))


def nrmse(y_hat, y):
    """Root mean squared error per output channel, divided by the channel's standard deviation, averaged.

    Standard deviations are population values (ddof=0).

    Args:
        y_hat: predicted outputs, shape (N, e)
        y: reference outputs, same shape

    Returns:
        float
    """
    y_hat, y = _paired(y_hat, y)
    check_finite(y, name="y")
    std = y.std(axis=0)
    if np.any(std == 0):
        raise ValueError("nrmse is undefined for a reference output with zero variance")
    rmse = np.sqrt(np.mean((y_hat - y) ** 2, axis=0))
    return float(np.mean(rmse / std))


def is_diverging(y, ratio=2.0, floor=1.0, guard_hit=False):
    """Classify an output sequence as diverging.

    A sequence diverges when the simulation guard stopped it, when it holds non-finite
    values, or when the magnitude of its final output exceeds `ratio` times the larger
    of its first-half peak magnitude and `floor`.

    Args:
        y: outputs, shape (N, e) or (N,)
        ratio (float): growth factor that counts as divergence
        floor (float): lower bound on the reference magnitude, so that decaying
            trajectories near zero are not flagged by noise
        guard_hit (bool): the simulation was stopped by the divergence guard

    Returns:
        bool
    """
    if guard_hit:
        return True
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if len(y) == 0:
        return False
    if not np.all(np.isfinite(y)):
        return True
    magnitude = np.linalg.norm(y, axis=1)
    half = max(1, len(magnitude) // 2)
    reference = max(float(magnitude[:half].max()), floor)
    return bool(magnitude[-1] > ratio * reference)
