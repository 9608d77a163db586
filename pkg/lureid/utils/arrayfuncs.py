import numpy as np
import scipy.linalg

from lureid.utils.exceptions import DimensionalityError, NonFiniteError


def as_matrix(x, shape=None, name="matrix"):
    """Converts x to a 2d float numpy array, optionally checking its shape.

    Args:
        x: nested list, numpy array or scalar
        shape (tuple): expected shape, or None to skip the check
        name (str): used in error messages

    Returns: numpy array of ndim 2
    """
    X_array = np.array(x, dtype=float)
    if X_array.ndim == 0:
        X_array = X_array.reshape(1, 1)
    if X_array.ndim == 1:
        X_array = X_array.reshape(1, -1) if shape is None or shape[0] == 1 else X_array.reshape(-1, 1)
    if X_array.ndim != 2:
        raise DimensionalityError(f"{name} must be 2-dimensional, got {X_array.ndim} dimensions")
    if shape is not None and X_array.shape != tuple(shape):
        raise DimensionalityError(f"{name} has shape {X_array.shape}, expected {tuple(shape)}")
    return X_array


def as_sequence(x, width, name="sequence"):
    """Converts a sequence of vectors to a (N, width) float array.

    A 1d input is read as a scalar sequence when width is 1.
    """
    X_array = np.array(x, dtype=float)
    if X_array.ndim == 1 and width == 1:
        X_array = X_array.reshape(-1, 1)
    if X_array.ndim != 2 or X_array.shape[1] != width:
        raise DimensionalityError(f"{name} must have shape (N, {width}), got {X_array.shape}")
    return X_array


def check_finite(x, name="matrix"):
    """Raise NonFiniteError if x has NaN or infinite entries."""
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return x


def sym(X):
    """Symmetric part of a square matrix."""
    return 0.5 * (X + X.T)


def cholesky_ok(X):
    """True iff the Cholesky factorization of the symmetric matrix X succeeds (X is positive definite)."""
    try:
        scipy.linalg.cholesky(X, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError):
        return False
    return True


def upper_blocks_to_symmetric(blocks):
    """Assemble a symmetric matrix from its upper-triangular block rows.

    `blocks[i][j]` holds block (i, j) for j >= i. Lower blocks are exact transposes,
    so the result is bitwise symmetric.
    """
    k = len(blocks)
    sizes = [blocks[i][0].shape[0] for i in range(k)]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    out = np.zeros((offsets[-1], offsets[-1]))
    for i in range(k):
        for j in range(i, k):
            block = blocks[i][j - i]
            out[offsets[i] : offsets[i + 1], offsets[j] : offsets[j + 1]] = block
            if j != i:
                out[offsets[j] : offsets[j + 1], offsets[i] : offsets[i + 1]] = block.T
    # diagonal blocks: mirror the upper triangle so the result is exactly symmetric
    return np.triu(out) + np.triu(out, 1).T
