"""
Sector conditions for the deadzone and the state-space sets they live on.

The generalized sector condition replaces the global slope bound of the deadzone
by a state-dependent quadratic form that is nonnegative on the polytope
L(H) = {x : |Hx|_inf <= 1}. Regions of attraction are ellipsoids E(X) = {x : x'Xx <= 1}.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from lureid.model.model import deadzone
from lureid.utils.arrayfuncs import as_matrix, check_finite, sym
from lureid.utils.exceptions import ConfigurationError, DimensionalityError
from lureid.utils.validation import check_positive, check_symmetric

PSD_TOLERANCE = 1e-10
EIGEN_CLAMP = 1e-12


@dataclass
class SectorData:
    """Multiplier and slope matrix of the generalized sector condition.

    Args:
        Lambda (np.ndarray): m x m positive diagonal matrix. A 1d array is read as its diagonal.
        H (np.ndarray): m x n matrix
    """

    Lambda: np.ndarray
    H: np.ndarray

    def __post_init__(self) -> None:
        """Validate."""
        Lambda = np.asarray(self.Lambda, dtype=float)
        if Lambda.ndim <= 1:
            Lambda = np.diag(np.atleast_1d(Lambda))
        if Lambda.ndim != 2 or Lambda.shape[0] != Lambda.shape[1]:
            raise DimensionalityError(f"Lambda must be square, got shape {Lambda.shape}")
        if np.any(Lambda != np.diag(np.diag(Lambda))):
            raise ConfigurationError("Lambda must be diagonal")
        if np.any(np.diag(Lambda) <= 0):
            raise ConfigurationError("Lambda must have strictly positive diagonal entries")
        self.Lambda = Lambda
        self.H = as_matrix(self.H, name="H")
        if self.H.shape[0] != Lambda.shape[0]:
            raise DimensionalityError(f"H has {self.H.shape[0]} rows, but Lambda is {Lambda.shape[0]} x {Lambda.shape[0]}")
        check_finite(self.H, name="H")


@dataclass
class Ellipsoid:
    """The set E(X) = {x : x'Xx <= 1}.

    Args:
        X (np.ndarray): symmetric positive semidefinite n x n matrix
    """

    X: np.ndarray

    def __post_init__(self) -> None:
        """Validate symmetry and semidefiniteness."""
        X = as_matrix(self.X, name="X")
        check_finite(X, name="X")
        check_symmetric(X, name="X", rtol=PSD_TOLERANCE)
        eigenvalues = scipy.linalg.eigvalsh(sym(X))
        if eigenvalues.min() < -PSD_TOLERANCE:
            raise ConfigurationError(f"X is not positive semidefinite (smallest eigenvalue {eigenvalues.min():.3e})")
        self.X = X

    @property
    def n(self) -> int:
        """Ambient dimension."""
        return self.X.shape[0]

    def semi_axes(self) -> np.ndarray:
        """Semi-axis lengths in increasing order; X must be positive definite."""
        eigenvalues = scipy.linalg.eigvalsh(sym(self.X))
        if eigenvalues.min() <= 0:
            raise ConfigurationError("ellipsoid is unbounded (X is singular)")
        return np.sort(1.0 / np.sqrt(eigenvalues))


@dataclass
class Polytope:
    """The set L(H) = {x : |Hx|_inf <= 1}.

    Args:
        H (np.ndarray): p x n matrix
    """

    H: np.ndarray

    def __post_init__(self) -> None:
        """Validate."""
        self.H = as_matrix(self.H, name="H")
        check_finite(self.H, name="H")


def gamma(v, x, sector: SectorData) -> float:
    """Generalized sector form 2 dzn(v)' Lambda (v + Hx - dzn(v)).

    Nonnegative for every v whenever x lies in L(H).

    ```python
    from lureid.sector import SectorData, gamma
    assert gamma([2.0], [1.0], SectorData(Lambda=[1.0], H=[[0.5]])) == 3.0
    ```

    Args:
        v (np.ndarray): nonlinearity input, length m
        x (np.ndarray): state, length n
        sector (SectorData): multiplier and slope matrix

    Returns:
        float
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    m, n = sector.H.shape
    if v.shape != (m,) or x.shape != (n,):
        raise DimensionalityError(f"expected v of length {m} and x of length {n}, got {v.shape} and {x.shape}")
    dz = np.atleast_1d(deadzone(v))
    return float(2.0 * dz @ sector.Lambda @ (v + sector.H @ x - dz))


def in_polytope(x, polytope: Polytope) -> bool:
    """True iff max_i |(Hx)_i| <= 1. An empty H describes the whole space."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if polytope.H.size == 0:
        return True
    return bool(np.max(np.abs(polytope.H @ x)) <= 1.0)


def in_ellipsoid(x, ellipsoid: Ellipsoid) -> bool:
    """True iff x'Xx <= 1."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return bool(x @ ellipsoid.X @ x <= 1.0)


def _inverse_sqrt(X):
    """X^{-1/2} for a symmetric positive definite X."""
    w, V = scipy.linalg.eigh(sym(X))
    w = np.where((w < 0) & (w >= -EIGEN_CLAMP), 0.0, w)
    if np.any(w <= 0):
        raise ConfigurationError("X must be positive definite")
    return (V / np.sqrt(w)) @ V.T


def ellipsoid_boundary_2d(ellipsoid: Ellipsoid, scale: float = 1.0, count: int = 200) -> np.ndarray:
    """Points on the boundary of E(X / scale^2) for n = 2.

    Point j is scale * X^{-1/2} (cos phi_j, sin phi_j) with phi_j = 2 pi j / count.

    Example:

    ```python
    import numpy as np
    from lureid.sector import Ellipsoid, ellipsoid_boundary_2d

    points = ellipsoid_boundary_2d(Ellipsoid(np.eye(2)), scale=1.0, count=4)
    np.testing.assert_allclose(points, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-12)
    ```

    Args:
        ellipsoid (Ellipsoid): the shape matrix X; must be positive definite
        scale (float): the region scale s
        count (int): number of points

    Returns:
        np.ndarray of shape (count, 2)
    """
    if ellipsoid.n != 2:
        raise DimensionalityError(f"boundary export supports n = 2 only, got n = {ellipsoid.n}")
    check_positive(scale, "scale")
    if count < 1:
        raise ConfigurationError(f"count must be positive, got {count}")
    phi = boundary_angles(count)
    circle = np.column_stack([np.cos(phi), np.sin(phi)])
    return scale * circle @ _inverse_sqrt(ellipsoid.X).T


def boundary_angles(count: int) -> np.ndarray:
    """Angles 2 pi j / count, j = 0..count-1."""
    return 2.0 * np.pi * np.arange(count) / count


def sample_ellipsoid(ellipsoid: Ellipsoid, scale: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw points uniformly from E(X / scale^2).

    A direction uniform on the sphere is scaled by U^{1/n} and mapped through scale * X^{-1/2}.

    Args:
        ellipsoid (Ellipsoid): the shape matrix X; must be positive definite
        scale (float): the region scale s
        count (int): number of samples
        rng (np.random.Generator): random source

    Returns:
        np.ndarray of shape (count, n)
    """
    n = ellipsoid.n
    g = rng.standard_normal((count, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / n)
    return scale * (g / norms * radii) @ _inverse_sqrt(ellipsoid.X).T


def _clip_line(normal, offset, bounds):
    """Clip {x : normal'x = offset} to the box (x1_min, x1_max, x2_min, x2_max).

    Returns the two endpoints, or None when the line misses the box.
    """
    x1_min, x1_max, x2_min, x2_max = bounds
    norm2 = float(normal @ normal)
    point = normal * offset / norm2
    direction = np.array([-normal[1], normal[0]])
    t_low, t_high = -np.inf, np.inf
    for axis, low, high in ((0, x1_min, x1_max), (1, x2_min, x2_max)):
        if direction[axis] == 0:
            if not low <= point[axis] <= high:
                return None
            continue
        t1 = (low - point[axis]) / direction[axis]
        t2 = (high - point[axis]) / direction[axis]
        t_low = max(t_low, min(t1, t2))
        t_high = min(t_high, max(t1, t2))
    if t_low > t_high:
        return None
    return point + t_low * direction, point + t_high * direction


def polytope_segments_2d(polytope: Polytope, bounds) -> pd.DataFrame:
    """Edges of L(H) in the plane, as the lines h_i'x = +1 and h_i'x = -1 clipped to a box.

    Example:

    ```python
    import numpy as np
    from lureid.sector import Polytope, polytope_segments_2d

    segments = polytope_segments_2d(Polytope(np.eye(2)), bounds=(-2, 2, -2, 2))
    assert list(segments.columns) == ["edge_id", "x1", "x2"]
    assert segments["edge_id"].nunique() == 4
    ```

    Args:
        polytope (Polytope): the slope matrix H, with n = 2
        bounds (tuple): (x1_min, x1_max, x2_min, x2_max)

    Returns:
        pd.DataFrame with columns edge_id, x1, x2; two rows (the endpoints) per edge
    """
    H = polytope.H
    if H.size and H.shape[1] != 2:
        raise DimensionalityError(f"polytope export supports n = 2 only, got n = {H.shape[1]}")
    x1_min, x1_max, x2_min, x2_max = (float(b) for b in bounds)
    if not (x1_min < x1_max and x2_min < x2_max):
        raise ConfigurationError(f"invalid bounding box {bounds}")
    rows = []
    edge_id = 0
    for h in H:
        if not np.any(h):
            continue
        for offset in (1.0, -1.0):
            clipped = _clip_line(h, offset, (x1_min, x1_max, x2_min, x2_max))
            if clipped is None:
                continue
            for end in clipped:
                rows.append({"edge_id": edge_id, "x1": end[0], "x2": end[1]})
            edge_id += 1
    return pd.DataFrame(rows, columns=["edge_id", "x1", "x2"])


def boundary_frame(ellipsoid: Ellipsoid, scale: float = 1.0, count: int = 200) -> pd.DataFrame:
    """ellipsoid_boundary_2d as a table with columns phi, x1, x2."""
    points = ellipsoid_boundary_2d(ellipsoid, scale=scale, count=count)
    return pd.DataFrame({"phi": boundary_angles(count), "x1": points[:, 0], "x2": points[:, 1]})
