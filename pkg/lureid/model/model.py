"""
The discrete-time Lur'e model with elementwise deadzone nonlinearity.

    x_{k+1} = A x_k + B u_k + B2 w_k
    y_k     = C x_k + D u_k + D12 w_k
    v_k     = C2 x_k + D21 u_k
    w_k     = dzn(v_k)
"""

import dataclasses
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from lureid.utils.arrayfuncs import as_matrix, as_sequence, check_finite
from lureid.utils.exceptions import ConfigurationError, DatasetFormatError, DimensionalityError, DivergenceWarning
from lureid.utils.io import check_schema_version, read_json, write_json

MODEL_SCHEMA_VERSION = 1

# |x_k| components above this abort a simulation
DIVERGENCE_BOUND = 1e9

MATRIX_NAMES = ("A", "B", "B2", "C", "D", "D12", "C2", "D21")


@dataclass(frozen=True)
class Dimensions:
    """Model dimensions.

    Args:
        n (int): state dimension
        r (int): input dimension
        e (int): output dimension
        m (int): number of nonlinearity channels (q = m)
    """

    n: int
    r: int
    e: int
    m: int

    def __post_init__(self) -> None:
        """Validate."""
        for name in ("n", "r", "e", "m"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigurationError(f"dimension {name} must be a positive integer, got {value!r}")

    def shapes(self) -> Dict[str, tuple]:
        """Expected shape per system matrix."""
        n, r, e, m = self.n, self.r, self.e, self.m
        return {
            "A": (n, n),
            "B": (n, r),
            "B2": (n, m),
            "C": (e, n),
            "D": (e, r),
            "D12": (e, m),
            "C2": (m, n),
            "D21": (m, r),
        }


@dataclass
class ModelParams:
    """The eight system matrices of the Lur'e model.

    Example:

    ```python
    import numpy as np
    from lureid.model import ModelParams, step

    params = ModelParams.zeros(n=2, r=1, e=1, m=2)
    x_next, y_hat, v, w = step(params, np.zeros(2), np.zeros(1))
    assert not x_next.any()
    ```

    Args:
        A, B, B2, C, D, D12, C2, D21: real matrices with shapes implied by `dims`.
    """

    A: np.ndarray
    B: np.ndarray
    B2: np.ndarray
    C: np.ndarray
    D: np.ndarray
    D12: np.ndarray
    C2: np.ndarray
    D21: np.ndarray

    def __post_init__(self) -> None:
        """Convert to float arrays and check shapes and finiteness."""
        A = as_matrix(self.A, name="A")
        B2 = as_matrix(self.B2, name="B2")
        C = as_matrix(self.C, name="C")
        B = as_matrix(self.B, name="B")
        dims = Dimensions(n=A.shape[0], r=B.shape[1], e=C.shape[0], m=B2.shape[1])
        for name, shape in dims.shapes().items():
            value = as_matrix(getattr(self, name), shape=shape, name=name)
            check_finite(value, name=name)
            object.__setattr__(self, name, value)
        self._dims = dims

    @property
    def dims(self) -> Dimensions:
        """Dimensions implied by the matrices."""
        return self._dims

    @classmethod
    def zeros(cls, n: int, r: int, e: int, m: int) -> "ModelParams":
        """All-zero model of the given dimensions."""
        dims = Dimensions(n=n, r=r, e=e, m=m)
        return cls(**{name: np.zeros(shape) for name, shape in dims.shapes().items()})

    def copy(self) -> "ModelParams":
        """Deep copy."""
        return ModelParams(**{name: getattr(self, name).copy() for name in MATRIX_NAMES})

    def replace(self, **matrices) -> "ModelParams":
        """Copy with some matrices replaced."""
        values = {name: getattr(self, name).copy() for name in MATRIX_NAMES}
        values.update(matrices)
        return ModelParams(**values)

    def n_parameters(self) -> int:
        """Number of entries in theta."""
        return int(sum(getattr(self, name).size for name in MATRIX_NAMES))

    def as_dict(self) -> dict:
        """JSON-ready representation."""
        doc = {"schema_version": MODEL_SCHEMA_VERSION, "dims": dataclasses.asdict(self.dims)}
        for name in MATRIX_NAMES:
            doc[name] = getattr(self, name).tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict, path=None) -> "ModelParams":
        """Inverse of as_dict; checks schema version and declared dims.

        Raises:
            DatasetFormatError: missing keys, wrong shapes or non-finite entries
        """
        check_schema_version(doc, MODEL_SCHEMA_VERSION, "model", path=path)
        try:
            dims = Dimensions(**doc["dims"])
            values = {}
            for name, shape in dims.shapes().items():
                if name not in doc:
                    raise DimensionalityError(f"model document is missing matrix {name}")
                values[name] = as_matrix(doc[name], shape=shape, name=name)
            return cls(**values)
        except KeyError as e:
            raise DatasetFormatError(f"model document has no {e.args[0]!r}", path=path) from e
        except (TypeError, ValueError) as e:
            raise DatasetFormatError(f"malformed model document: {e}", path=path) from e

    def save_json(self, path) -> None:
        """Write model.json."""
        write_json(self.as_dict(), path)

    @classmethod
    def load_json(cls, path) -> "ModelParams":
        """Read model.json."""
        return cls.from_dict(read_json(path), path=str(path))

    def __eq__(self, other):
        """Bitwise equality of all matrices."""
        if not isinstance(other, ModelParams):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in MATRIX_NAMES)


@dataclass
class Trajectory:
    """One rollout.

    Args:
        x0 (np.ndarray): initial state, shape (n,)
        u (np.ndarray): inputs, shape (N, r)
        y (np.ndarray): outputs, shape (N, e)
        x (np.ndarray): optional states x_0..x_{N-1}, shape (N, n)
        v (np.ndarray): optional nonlinearity inputs, shape (N, m)
        w (np.ndarray): optional nonlinearity outputs, shape (N, m)
        diverged (bool): True when the simulation guard stopped the rollout
            or the outputs were classified as diverging
        diverged_at (int): step at which the guard fired, if it did
    """

    x0: np.ndarray
    u: np.ndarray
    y: np.ndarray
    x: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    diverged: bool = False
    diverged_at: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Coerce arrays and check lengths."""
        self.x0 = np.array(self.x0, dtype=float).reshape(-1)
        self.u = np.array(self.u, dtype=float)
        self.y = np.array(self.y, dtype=float)
        if self.u.ndim == 1:
            self.u = self.u.reshape(-1, 1)
        if self.y.ndim == 1:
            self.y = self.y.reshape(-1, 1)
        if len(self.u) != len(self.y):
            raise DimensionalityError(f"u has {len(self.u)} steps but y has {len(self.y)}")

    def __len__(self):
        """Number of steps."""
        return len(self.y)


def deadzone(v):
    """Elementwise deadzone: 0 on [-1, 1], v - 1 above, v + 1 below.

    ```python
    from lureid.model import deadzone
    assert deadzone(0.5) == 0.0
    assert deadzone(2.0) == 1.0
    assert deadzone(-3.0) == -2.0
    ```
    """
    v = np.asarray(v, dtype=float)
    out = np.where(v > 1.0, v - 1.0, np.where(v < -1.0, v + 1.0, 0.0))
    if out.ndim == 0:
        return float(out)
    return out


def deadzone_derivative(v):
    """Derivative of the deadzone; 0 on the closed deadband, including |v| = 1."""
    v = np.asarray(v, dtype=float)
    return (np.abs(v) > 1.0).astype(float)


def _check_vector(x, size, name):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (size,):
        raise DimensionalityError(f"{name} must have length {size}, got {x.shape[0]}")
    return x


def step(params: ModelParams, x, u):
    """One step of the model.

    Args:
        params (ModelParams): the model
        x: state, length n
        u: input, length r

    Returns:
        x_next, y_hat, v, w (tuple of np.ndarray)
    """
    dims = params.dims
    x = _check_vector(x, dims.n, "x")
    u = _check_vector(u, dims.r, "u")
    v = params.C2 @ x + params.D21 @ u
    w = deadzone(v)
    x_next = params.A @ x + params.B @ u + params.B2 @ w
    y_hat = params.C @ x + params.D @ u + params.D12 @ w
    return x_next, y_hat, v, w


@dataclass
class BatchRollout:
    """Result of simulate_batch.

    Arrays are indexed (trajectory, step, component). `alive[i, k]` is False from the
    step at which trajectory i hit the divergence guard; states, outputs and
    nonlinearity signals are zero there.
    """

    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    w: np.ndarray
    alive: np.ndarray

    @property
    def diverged_at(self) -> np.ndarray:
        """First dead step per trajectory, -1 when the trajectory never diverged."""
        dead = ~self.alive
        first = np.argmax(dead, axis=1)
        return np.where(dead.any(axis=1), first, -1)


def simulate_batch(params: ModelParams, x0, u, bound: float = DIVERGENCE_BOUND) -> BatchRollout:
    """Simulate a batch of equal-length trajectories at once.

    Args:
        params (ModelParams): the model
        x0: initial states, shape (b, n)
        u: inputs, shape (b, N, r)
        bound (float): divergence guard on |x_k| components

    Returns:
        BatchRollout with x of shape (b, N, n) holding x_0..x_{N-1}
    """
    dims = params.dims
    x0 = np.asarray(x0, dtype=float)
    u = np.asarray(u, dtype=float)
    if x0.ndim != 2 or x0.shape[1] != dims.n:
        raise DimensionalityError(f"x0 must have shape (b, {dims.n}), got {x0.shape}")
    if u.ndim != 3 or u.shape[0] != x0.shape[0] or u.shape[2] != dims.r:
        raise DimensionalityError(f"u must have shape ({x0.shape[0]}, N, {dims.r}), got {u.shape}")
    b, N, _ = u.shape
    xs = np.zeros((b, N, dims.n))
    ys = np.zeros((b, N, dims.e))
    vs = np.zeros((b, N, dims.m))
    ws = np.zeros((b, N, dims.m))
    alive = np.zeros((b, N), dtype=bool)

    x = x0.copy()
    ok = np.all(np.isfinite(x), axis=1) & np.all(np.abs(x) <= bound, axis=1)
    x[~ok] = 0.0
    for k in range(N):
        alive[:, k] = ok
        uk = u[:, k, :]
        v = x @ params.C2.T + uk @ params.D21.T
        w = deadzone(v)
        y = x @ params.C.T + uk @ params.D.T + w @ params.D12.T
        x_next = x @ params.A.T + uk @ params.B.T + w @ params.B2.T
        mask = ok[:, None]
        xs[:, k, :] = np.where(mask, x, 0.0)
        ys[:, k, :] = np.where(mask, y, 0.0)
        vs[:, k, :] = np.where(mask, v, 0.0)
        ws[:, k, :] = np.where(mask, w, 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            ok = ok & np.all(np.isfinite(x_next), axis=1) & np.all(np.abs(x_next) <= bound, axis=1)
        x = np.where(ok[:, None], x_next, 0.0)
    return BatchRollout(x=xs, y=ys, v=vs, w=ws, alive=alive)


def simulate(params: ModelParams, x0, u, record_states: bool = False) -> Trajectory:
    """Simulate the model from x0 under the input sequence u.

    The returned trajectory's `y` holds the predictions. If a state component
    exceeds the divergence bound the rollout stops: the trajectory keeps its
    finite prefix and reports `diverged=True` with `diverged_at`.

    Example:

    ```python
    import numpy as np
    from lureid.datasets import true_system
    from lureid.model import simulate

    traj = simulate(true_system(), x0=np.zeros(2), u=np.zeros((50, 1)))
    assert not traj.y.any()
    ```

    Args:
        params (ModelParams): the model
        x0: initial state, length n
        u: inputs, shape (N, r); a 1d array is accepted when r == 1
        record_states (bool): keep x, v, w on the trajectory

    Returns:
        Trajectory
    """
    dims = params.dims
    x0 = _check_vector(x0, dims.n, "x0")
    u = as_sequence(u, dims.r, name="u")
    if len(u) < 1:
        raise DimensionalityError("u must contain at least one step")
    rollout = simulate_batch(params, x0[None, :], u[None, :, :])
    first_dead = int(rollout.diverged_at[0])
    N = len(u) if first_dead < 0 else first_dead
    if first_dead >= 0:
        warnings.warn(DivergenceWarning(f"simulation diverged at step {first_dead}"))
    traj = Trajectory(
        x0=x0,
        u=u[:N],
        y=rollout.y[0, :N],
        diverged=first_dead >= 0,
        diverged_at=first_dead if first_dead >= 0 else None,
    )
    if record_states:
        traj.x = rollout.x[0, :N]
        traj.v = rollout.v[0, :N]
        traj.w = rollout.w[0, :N]
    return traj
