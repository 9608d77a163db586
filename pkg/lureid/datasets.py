"""
Synthetic identification data from a known Lur'e system, and dataset persistence.
"""

import functools
import logging
import pathlib
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from lureid.metrics.metrics import is_diverging
from lureid.model.model import ModelParams, Trajectory, simulate
from lureid.sdp.problem import SolverSettings
from lureid.sdp.programs import post_process
from lureid.utils.config import ConfigMixin
from lureid.utils.exceptions import (
    ConfigurationError,
    DatasetFormatError,
    DatasetValidationError,
    DivergenceWarning,
)
from lureid.utils.io import check_schema_version, read_json, write_json
from lureid.utils.rng import philox_rng
from lureid.utils.validation import check_unit_interval

logger = logging.getLogger(__name__)

DATASET_SCHEMA_VERSION = 1

TEST_FRACTION = 0.1

INPUT_KINDS = ("sin", "noise")


def true_system() -> ModelParams:
    """The data-generating system: n = 2, r = 1, e = 1, m = 2.

    ```python
    from lureid.datasets import true_system

    params = true_system()
    assert params.A[0, 0] == 0.998
    assert params.dims.m == 2
    ```
    """
    return ModelParams(
        A=[[0.998, 0.096], [-0.048, 0.921]],
        B=[[0.0049], [0.096]],
        B2=[[0.4191, 0.4191], [0.3744, 0.3744]],
        C=[[1.0, 0.0]],
        D=[[0.0]],
        D12=[[1.0, 1.0]],
        C2=[[0.18, 0.0], [0.0, 0.18]],
        D21=[[1.0], [1.0]],
    )


@functools.lru_cache(maxsize=8)
def _default_region_scale(alpha: float) -> float:
    return post_process(true_system(), alpha, delta=0.0).s


def true_region_scale(alpha: float, settings: Optional[SolverSettings] = None) -> float:
    """Largest certified region scale s of true_system() at contraction rate alpha.

    Solved with no input bound; the input amplitude of generated data is then
    sqrt(1 - alpha^2) s, which the same certificate admits.
    """
    check_unit_interval(alpha, "alpha")
    if settings is None:
        return _default_region_scale(float(alpha))
    return post_process(true_system(), alpha, delta=0.0, settings=settings).s


@dataclass
class GenConfig(ConfigMixin):
    """Recipe of a generated dataset.

    Args:
        n_sin (int): trajectories with sinusoidal input and random initial state
        n_noise (int): trajectories with uniform noise input and random initial state
        n_sin_zero (int): trajectories with sinusoidal input starting at x0 = 0
        n_noise_zero (int): trajectories with noise input starting at x0 = 0
        length (int): steps per trajectory
        dt (float): sampling time of the sinusoid
        x0_range (float): initial state components are uniform in [-x0_range, x0_range]
        alpha_true (float): contraction rate used to scale the inputs
        s_true (float): region scale of the true system; None computes it with true_region_scale
        seed (int): seed of the Philox streams
    """

    n_sin: int = 300
    n_noise: int = 300
    n_sin_zero: int = 150
    n_noise_zero: int = 150
    length: int = 50
    dt: float = 0.1
    x0_range: float = 6.0
    alpha_true: float = 0.97
    s_true: Optional[float] = None
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate."""
        for name in ("n_sin", "n_noise", "n_sin_zero", "n_noise_zero"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.length < 1:
            raise ConfigurationError(f"length must be >= 1, got {self.length}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if self.x0_range < 0:
            raise ConfigurationError(f"x0_range must be >= 0, got {self.x0_range}")
        check_unit_interval(self.alpha_true, "alpha_true")
        if self.s_true is not None and not self.s_true > 0:
            raise ConfigurationError(f"s_true must be > 0, got {self.s_true}")

    @property
    def n_trajectories(self) -> int:
        """Total number of trajectories."""
        return self.n_sin + self.n_noise + self.n_sin_zero + self.n_noise_zero

    def plan(self) -> List[Tuple[str, bool]]:
        """(input kind, zero start) per trajectory, in generation order."""
        return (
            [("sin", False)] * self.n_sin
            + [("noise", False)] * self.n_noise
            + [("sin", True)] * self.n_sin_zero
            + [("noise", True)] * self.n_noise_zero
        )


def train_test_split_configs(config: GenConfig) -> Tuple[GenConfig, GenConfig]:
    """The training config and an independent test config (seed + 1, a tenth of each count).

    Counts are rounded; a positive training count keeps at least one test trajectory.
    """

    def tenth(count):
        return max(1, int(round(TEST_FRACTION * count))) if count > 0 else 0

    test = GenConfig.from_dict(
        {
            **config.as_dict(),
            "n_sin": tenth(config.n_sin),
            "n_noise": tenth(config.n_noise),
            "n_sin_zero": tenth(config.n_sin_zero),
            "n_noise_zero": tenth(config.n_noise_zero),
            "seed": config.seed + 1,
        }
    )
    return config, test


@dataclass
class Dataset:
    """Input-output trajectories with the generation metadata.

    Args:
        trajectories (list): Trajectory objects with a common input and output width
        delta (float): max |u| over all trajectories, steps and channels
        config (GenConfig): the recipe, when generated
        s_true (float): region scale used to scale the inputs, when generated
        fingerprint (dict): generator identification
    """

    trajectories: List[Trajectory]
    delta: float
    config: Optional[GenConfig] = None
    s_true: Optional[float] = None
    fingerprint: Dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Check the shared dimensions and the declared delta."""
        if self.trajectories:
            first = self.trajectories[0]
            for i, traj in enumerate(self.trajectories):
                if traj.x0.size != first.x0.size or traj.u.shape[1] != first.u.shape[1] or traj.y.shape[1] != first.y.shape[1]:
                    raise DatasetValidationError(f"trajectory {i} does not match the dimensions of trajectory 0")
        recomputed = compute_delta(self.trajectories)
        if float(self.delta) != recomputed:
            raise DatasetValidationError(f"declared delta {self.delta!r} differs from max |u| = {recomputed!r}")
        self.delta = float(self.delta)

    def __len__(self):
        """Number of trajectories."""
        return len(self.trajectories)

    @property
    def n_points(self) -> int:
        """Total number of input-output samples."""
        return int(sum(len(t) for t in self.trajectories))

    @property
    def diverged(self) -> np.ndarray:
        """Divergence flag per trajectory."""
        return np.array([t.diverged for t in self.trajectories], dtype=bool)

    def as_dict(self) -> Dict:
        """JSON-ready representation."""
        return {
            "schema_version": DATASET_SCHEMA_VERSION,
            "meta": {
                "delta": self.delta,
                "s_true": self.s_true,
                "config": None if self.config is None else self.config.as_dict(),
                "fingerprint": self.fingerprint,
            },
            "trajectories": [
                {
                    "x0": t.x0.tolist(),
                    "u": t.u.tolist(),
                    "y": t.y.tolist(),
                    "diverged": bool(t.diverged),
                    "diverged_at": None if t.diverged_at is None else int(t.diverged_at),
                    "meta": t.meta,
                }
                for t in self.trajectories
            ],
        }

    @classmethod
    def from_dict(cls, doc: Dict, path=None) -> "Dataset":
        """Inverse of as_dict; validates the schema version and delta."""
        check_schema_version(doc, DATASET_SCHEMA_VERSION, "dataset", path=path)
        for key in ("meta", "trajectories"):
            if key not in doc:
                raise DatasetFormatError(f"dataset document has no {key!r}", path=path)
        meta = doc["meta"]
        trajectories = []
        for i, item in enumerate(doc["trajectories"]):
            try:
                traj = Trajectory(
                    x0=item["x0"],
                    u=item["u"],
                    y=item["y"],
                    diverged=bool(item.get("diverged", False)),
                    diverged_at=item.get("diverged_at"),
                )
            except (KeyError, ValueError) as e:
                raise DatasetValidationError(f"trajectory {i} is malformed: {e}") from e
            traj.meta = dict(item.get("meta", {}))
            trajectories.append(traj)
        config = meta.get("config")
        return cls(
            trajectories=trajectories,
            delta=meta.get("delta", float("nan")),
            config=None if config is None else GenConfig.from_dict(config),
            s_true=meta.get("s_true"),
            fingerprint=meta.get("fingerprint", {}),
        )


def compute_delta(trajectories) -> float:
    """max |u| over all trajectories, steps and channels; 0 for no data."""
    peaks = [float(np.max(np.abs(t.u))) for t in trajectories if t.u.size]
    return max(peaks) if peaks else 0.0


def _input_sequence(kind: str, amplitude: float, length: int, dt: float, rng: np.random.Generator):
    if kind == "sin":
        return amplitude * np.sin(np.arange(length) * dt).reshape(-1, 1)
    return rng.uniform(-amplitude, amplitude, size=(length, 1))


def generate(config: Optional[GenConfig] = None, settings: Optional[SolverSettings] = None) -> Dataset:
    """Simulate true_system() according to a recipe.

    Inputs have amplitude a = sqrt(s^2 (1 - alpha^2)): u_k = a sin(k dt) or u_k uniform in [-a, a].
    Trajectory i draws from its own Philox substream, so each trajectory depends only on
    (seed, i). Divergent trajectories are kept and flagged.

    Example:

    ```python
    from lureid.datasets import GenConfig, generate

    data = generate(GenConfig(n_sin=3, n_noise=3, n_sin_zero=1, n_noise_zero=1, length=20, seed=7))
    assert len(data) == 8 and data.n_points == 160
    ```

    Args:
        config (GenConfig): the recipe
        settings (SolverSettings): used when s_true must be computed

    Returns:
        Dataset
    """
    config = config or GenConfig()
    s_true = config.s_true if config.s_true is not None else true_region_scale(config.alpha_true, settings)
    amplitude = float(np.sqrt(s_true**2 * (1.0 - config.alpha_true**2)))
    params = true_system()
    n = params.dims.n

    trajectories = []
    for i, (kind, zero_start) in enumerate(config.plan()):
        rng = philox_rng(config.seed, i)
        x0 = np.zeros(n) if zero_start else rng.uniform(-config.x0_range, config.x0_range, size=n)
        u = _input_sequence(kind, amplitude, config.length, config.dt, rng)
        with warnings.catch_warnings():
            # flagged below instead
            warnings.simplefilter("ignore", DivergenceWarning)
            sim = simulate(params, x0, u)
        traj = Trajectory(
            x0=x0,
            u=sim.u,
            y=sim.y,
            diverged=is_diverging(sim.y, guard_hit=sim.diverged),
            diverged_at=sim.diverged_at,
            meta={"kind": kind, "zero_start": zero_start},
        )
        trajectories.append(traj)

    dataset = Dataset(
        trajectories=trajectories,
        delta=compute_delta(trajectories),
        config=config,
        s_true=float(s_true),
        fingerprint={"generator": "lureid.datasets.generate", "bit_generator": "Philox", "seed": config.seed},
    )
    logger.info(
        f"generated {len(dataset)} trajectories ({int(dataset.diverged.sum())} diverging), "
        f"delta={dataset.delta:.6g}, s_true={s_true:.6g}"
    )
    return dataset


def save(dataset: Dataset, path) -> None:
    """Write a dataset as JSON; floats keep full precision."""
    write_json(dataset.as_dict(), path)


def load(path) -> Dataset:
    """Read a dataset written by save.

    Raises:
        DatasetFormatError: the file is not valid JSON
        SchemaVersionError: unsupported schema version
        DatasetValidationError: declared delta or shapes are inconsistent
    """
    return Dataset.from_dict(read_json(path), path=str(path))


def export_csv(dataset: Dataset, directory) -> List[pathlib.Path]:
    """One CSV per trajectory with columns k, u1..ur, y1..ye."""
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    width = len(str(max(len(dataset) - 1, 0)))
    for i, traj in enumerate(dataset.trajectories):
        frame = pd.DataFrame(
            np.column_stack([traj.u, traj.y]),
            columns=[f"u{j + 1}" for j in range(traj.u.shape[1])] + [f"y{j + 1}" for j in range(traj.y.shape[1])],
        )
        frame.insert(0, "k", np.arange(len(traj)))
        path = directory / f"traj_{i:0{width}d}.csv"
        frame.to_csv(path, index=False, float_format="%.17g")
        paths.append(path)
    return paths
