import numpy as np
import pytest

from lureid.metrics import is_diverging, mse, nrmse
from lureid.utils.exceptions import DimensionalityError


def test_mse_examples():
    """Squared Euclidean error averaged over steps."""
    assert mse([[1.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]) == 1.0
    assert mse([3.0], [1.0]) == 4.0
    assert mse(np.ones((5, 2)), np.ones((5, 2))) == 0.0


def test_mse_shape_mismatch():
    """Different shapes and empty sequences raise."""
    with pytest.raises(DimensionalityError):
        mse(np.zeros((3, 1)), np.zeros((4, 1)))
    with pytest.raises(DimensionalityError):
        mse(np.zeros((0, 1)), np.zeros((0, 1)))


def test_nrmse_examples():
    """RMSE per channel over the channel's population std."""
    y = np.array([1.0, -1.0, 1.0, -1.0])
    assert nrmse(np.zeros(4), y) == pytest.approx(1.0)
    assert nrmse(y, y) == 0.0
    y2 = np.column_stack([y, 2 * y])
    assert nrmse(np.zeros((4, 2)), y2) == pytest.approx(1.0)


def test_nrmse_constant_reference():
    """Zero variance in the reference is refused."""
    with pytest.raises(ValueError):
        nrmse(np.zeros(3), np.ones(3))


def test_is_diverging():
    """Growth, decay, non-finite values and the guard flag."""
    assert is_diverging(2.0 ** np.arange(10))
    assert not is_diverging(0.9 ** np.arange(10))
    assert not is_diverging(np.zeros((10, 1)))
    assert is_diverging([1.0, 2.0, np.inf])
    assert is_diverging(np.zeros(5), guard_hit=True)
    assert not is_diverging(np.zeros((0, 1)))


def test_is_diverging_floor():
    """Small oscillations around zero are not flagged."""
    y = np.array([1e-6, -1e-6, 1e-3, -1e-2, 0.5])
    assert not is_diverging(y)
