"""
Training of regionally stable Lur'e models.

The loss is the prediction error plus nu times the log-det barrier of the certificate
conditions. After every epoch the certificate is verified; a failing one is restored
by a feasibility program, and if that fails the variables roll back to the last
verified snapshot.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from lureid.certificate.certificate import Certificate, check_certificate
from lureid.model.model import Dimensions, ModelParams
from lureid.sdp.problem import SolverSettings
from lureid.sdp.programs import feasibility_restore, initial_model, initialize
from lureid.trainer.barrier import barrier_gradient, barrier_value
from lureid.trainer.bptt import TrajectoryBatch, prediction_loss, prediction_loss_gradient
from lureid.trainer.optimizer import AdamMoments, adam_update
from lureid.trainer.parameters import MODES, Omega, trainable_blocks
from lureid.utils.config import ConfigMixin
from lureid.utils.exceptions import (
    CertificateWarning,
    ConfigurationError,
    InfeasibleError,
    NonFiniteError,
    NumericalFailureError,
    TrainingAbortedError,
)
from lureid.utils.rng import philox_rng

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "mse", "barrier", "total", "nu", "feasible", "restored", "rolled_back"]

# scale of the random perturbation of the unconstrained initial model
NOSEC_INIT_SCALE = 0.01


@dataclass
class TrainConfig(ConfigMixin):
    """Hyperparameters of a training run.

    Example:

    ```python
    from lureid.trainer import TrainConfig

    config = TrainConfig(mode="stdsec", epochs=10, batch_size=16)
    assert TrainConfig.from_dict(config.as_dict()) == config
    ```

    Args:
        mode (str): "gensec" (generalized sector conditions), "stdsec" (L fixed at 0)
            or "nosec" (no stability constraints)
        epochs (int): number of passes over the data
        batch_size (int): trajectories per optimizer step
        learning_rate (float): Adam step size
        adam_beta1 (float): Adam first moment decay
        adam_beta2 (float): Adam second moment decay
        adam_eps (float): Adam denominator offset
        nu0 (float): initial barrier weight
        nu_decay (float): multiplicative barrier weight decay per epoch
        nu_min (float): lower bound on the barrier weight
        delta (float): input bound; None takes it from the training data
        check_every (int): epochs between certificate checks
        seed (int): seed of shuffling and initialization
        rollback_limit (int): consecutive rollbacks before training aborts
        max_halvings (int): step halvings tried when a step leaves the feasible set
        n_states (int): state dimension when no initial model is given
        n_channels (int): number of nonlinearity channels when no initial model is given
        init_beta (float): radius of a ball the initial region must contain, if set
    """

    mode: str = "gensec"
    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    nu0: float = 1e-3
    nu_decay: float = 0.999
    nu_min: float = 1e-6
    delta: Optional[float] = None
    check_every: int = 1
    seed: int = 0
    rollback_limit: int = 10
    max_halvings: int = 20
    n_states: int = 2
    n_channels: int = 2
    init_beta: Optional[float] = None

    def __post_init__(self) -> None:
        """Validate."""
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if not self.adam_eps > 0:
            raise ConfigurationError(f"adam_eps must be > 0, got {self.adam_eps}")
        if not self.nu0 > 0:
            raise ConfigurationError(f"nu0 must be > 0, got {self.nu0}")
        if not 0 < self.nu_decay <= 1:
            raise ConfigurationError(f"nu_decay must lie in (0, 1], got {self.nu_decay}")
        if self.nu_min < 0:
            raise ConfigurationError(f"nu_min must be >= 0, got {self.nu_min}")
        if self.delta is not None and self.delta < 0:
            raise ConfigurationError(f"delta must be >= 0, got {self.delta}")
        for name in ("check_every", "rollback_limit", "n_states", "n_channels"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.max_halvings < 0:
            raise ConfigurationError(f"max_halvings must be >= 0, got {self.max_halvings}")

    @property
    def constrained(self) -> bool:
        """True for the modes that carry a certificate."""
        return self.mode != "nosec"


@dataclass
class TrainState:
    """Mutable state of a run.

    `snapshot` is the last variable whose certificate passed verification (constrained modes).
    """

    omega: Omega
    moments: AdamMoments
    nu: float
    epoch: int = 0
    snapshot: Optional[Omega] = None
    history: List[dict] = field(default_factory=list)
    consecutive_rollbacks: int = 0
    total_rollbacks: int = 0
    total_restorations: int = 0

    def history_frame(self) -> pd.DataFrame:
        """History as a table with HISTORY_COLUMNS."""
        return pd.DataFrame(self.history, columns=HISTORY_COLUMNS)


@dataclass
class TrainResult:
    """Outcome of train. Unpacks as (params, certificate, state)."""

    params: ModelParams
    certificate: Optional[Certificate]
    state: TrainState
    delta: float

    def __iter__(self):
        """Unpack."""
        return iter((self.params, self.certificate, self.state))

    @property
    def history(self) -> pd.DataFrame:
        """Loss history."""
        return self.state.history_frame()


def _as_batch(batch) -> TrajectoryBatch:
    if isinstance(batch, TrajectoryBatch):
        return batch
    return TrajectoryBatch.from_trajectories(list(batch))


def training_loss(omega: Omega, batch, nu: float, delta: float, mode: str = "gensec") -> Tuple[float, float, float]:
    """Loss of Omega on a batch.

    Args:
        omega (Omega): model and certificate variables
        batch: TrajectoryBatch or a list of trajectories
        nu (float): barrier weight
        delta (float): input bound
        mode (str): in "nosec" the barrier is not evaluated

    Returns:
        (total, mse part, barrier part); the total is +inf outside the feasible set
    """
    batch = _as_batch(batch)
    mse_part = prediction_loss(omega.params, batch)
    barrier_part = 0.0 if mode == "nosec" else barrier_value(omega, delta)
    if not np.isfinite(barrier_part):
        return float("inf"), mse_part, barrier_part
    return mse_part + nu * barrier_part, mse_part, barrier_part


def loss_gradient(omega: Omega, batch, nu: float, delta: float, mode: str = "gensec") -> Omega:
    """Gradient of training_loss, structured like omega.

    Blocks that the mode does not train (L in stdsec, all certificate variables in nosec)
    get a zero gradient.
    """
    batch = _as_batch(batch)
    _, model_grad = prediction_loss_gradient(omega.params, batch)
    grad = omega.zeros_like()
    for name, value in model_grad.items():
        grad[name] = value
    if mode != "nosec":
        if not np.isfinite(barrier_value(omega, delta)):
            raise NonFiniteError("the loss is infinite at this point; gradients are undefined")
        b_grad = barrier_gradient(omega, delta)
        for name in b_grad.blocks:
            grad[name] = grad[name] + nu * b_grad[name]
    trainable = set(trainable_blocks(mode))
    for name in grad.blocks:
        if name not in trainable:
            grad[name] = np.zeros_like(grad[name])
    return grad


def adam_step(
    state: TrainState,
    gradient: Omega,
    config: TrainConfig,
    accept: Optional[Callable[[Omega], bool]] = None,
) -> Optional[Omega]:
    """Apply one Adam update to state.omega and return the new omega.

    When `accept` rejects the candidate the step is halved, at most `config.max_halvings`
    times. The moments are committed together with an accepted candidate; if every
    candidate is rejected the state is left unchanged and None is returned.

    ```python
    import numpy as np
    from lureid.model import Dimensions
    from lureid.sdp import initialize
    from lureid.trainer import AdamMoments, Omega, TrainConfig, TrainState, adam_step

    params, cert = initialize(Dimensions(n=2, r=1, e=1, m=2), delta=1.0, seed=0)
    omega = Omega.from_model(params, cert)
    state = TrainState(omega=omega, moments=AdamMoments.zeros(omega.size), nu=1e-3)
    gradient = omega.zeros_like()
    gradient["A"] = np.ones((2, 2))
    new = adam_step(state, gradient, TrainConfig(learning_rate=0.01))
    assert np.allclose(new["A"], params.A - 0.01)
    ```
    """
    step, moments = adam_update(
        state.moments,
        gradient.flatten(),
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
    )
    start = state.omega.flatten()
    scale = 1.0
    for _ in range(config.max_halvings + 1):
        candidate = Omega.unflatten(start + scale * step, state.omega)
        if accept is None or accept(candidate):
            state.omega = candidate
            state.moments = moments
            return candidate
        scale *= 0.5
    return None


def default_nosec_init(dims: Dimensions, seed: int) -> ModelParams:
    """Initial model for unconstrained training: the fixed initialization structure plus small noise."""
    params = initial_model(dims, seed)
    rng = philox_rng(seed, 1)
    return params.replace(
        **{name: getattr(params, name) + NOSEC_INIT_SCALE * rng.standard_normal(shape) for name, shape in dims.shapes().items()}
    )


def _placeholder_certificate(dims: Dimensions) -> Certificate:
    return Certificate(P=np.eye(dims.n), L=np.zeros((dims.m, dims.n)), M=np.ones(dims.m), s=1.0, alpha=0.5)


def _data(dataset):
    trajectories = list(getattr(dataset, "trajectories", dataset))
    if not trajectories:
        raise ConfigurationError("the training data holds no trajectories")
    return trajectories


def _resolve_delta(dataset, trajectories, config: TrainConfig) -> float:
    if config.delta is not None:
        return float(config.delta)
    delta = getattr(dataset, "delta", None)
    if delta is not None:
        return float(delta)
    return float(max(np.max(np.abs(t.u)) for t in trajectories))


def _initial_omega(dims, delta, config, init, settings) -> Omega:
    fix_L_zero = config.mode == "stdsec"
    if config.mode == "nosec":
        params = init[0] if init is not None else default_nosec_init(dims, config.seed)
        return Omega.from_model(params, _placeholder_certificate(params.dims))

    if init is None:
        params, cert = initialize(dims, delta, beta=config.init_beta, seed=config.seed, settings=settings, fix_L_zero=fix_L_zero)
        return Omega.from_model(params, cert)

    params, cert = init
    if cert is None:
        raise ConfigurationError(f"mode {config.mode} needs an initial certificate")
    if fix_L_zero and np.any(cert.L):
        cert = cert.replace(L=np.zeros_like(cert.L))
    report = check_certificate(params, cert, delta)
    if not report.passed:
        warnings.warn(
            CertificateWarning(f"initial certificate fails {report.failed_conditions()}; restoring it")
        )
        s = cert.s if 0 < cert.alpha < 1 and delta**2 < (1 - cert.alpha**2) * cert.s**2 else None
        if s is None:
            raise ConfigurationError(
                "the initial certificate does not admit the input bound; re-initialize with sdp.initialize"
            )
        try:
            cert = feasibility_restore(params, s, cert.alpha, delta, settings=settings, fix_L_zero=fix_L_zero)
        except (InfeasibleError, NumericalFailureError) as e:
            raise ConfigurationError(f"the initial point cannot be made feasible ({e}); re-initialize") from e
    return Omega.from_model(params, cert)


def _verify_or_restore(state: TrainState, config: TrainConfig, delta: float, settings) -> dict:
    """Epoch-end check; returns the flags for the history row."""
    omega = state.omega
    flags = {"feasible": False, "restored": False, "rolled_back": False}
    report = check_certificate(omega.params, omega.certificate(), delta)
    if report.passed and np.isfinite(barrier_value(omega, delta)):
        flags["feasible"] = True
        state.snapshot = omega.copy()
        state.consecutive_rollbacks = 0
        return flags

    logger.warning(
        f"epoch {state.epoch}: certificate fails {report.failed_conditions()}; solving the feasibility program"
    )
    try:
        cert = feasibility_restore(
            omega.params,
            np.sqrt(omega.sigma),
            omega.alpha,
            delta,
            settings=settings,
            fix_L_zero=config.mode == "stdsec",
        )
        restored = Omega.from_model(omega.params, cert)
        if not np.isfinite(barrier_value(restored, delta)):
            raise NumericalFailureError("restored certificate lies on the boundary of the feasible set")
    except (InfeasibleError, NumericalFailureError, ConfigurationError) as e:
        logger.warning(f"epoch {state.epoch}: restoration failed ({e}); rolling back")
        state.omega = state.snapshot.copy()
        state.moments = AdamMoments.zeros(state.omega.size)
        state.consecutive_rollbacks += 1
        state.total_rollbacks += 1
        flags["rolled_back"] = True
        flags["feasible"] = True
        if state.consecutive_rollbacks >= config.rollback_limit:
            raise TrainingAbortedError(
                f"training aborted after {state.consecutive_rollbacks} consecutive rollbacks", history=state.history
            )
        return flags

    logger.warning(f"epoch {state.epoch}: certificate restored")
    state.omega = restored
    state.snapshot = restored.copy()
    state.consecutive_rollbacks = 0
    state.total_restorations += 1
    flags["feasible"] = True
    flags["restored"] = True
    return flags


def _descend(state: TrainState, batch: TrajectoryBatch, config: TrainConfig, delta: float) -> bool:
    """One safeguarded optimizer step; returns False when every halving left the feasible set."""
    gradient = loss_gradient(state.omega, batch, state.nu, delta, mode=config.mode)

    def feasible(candidate: Omega) -> bool:
        return bool(np.isfinite(barrier_value(candidate, delta)))

    if adam_step(state, gradient, config, accept=feasible if config.constrained else None) is not None:
        return True
    logger.debug(f"epoch {state.epoch}: step rejected after {config.max_halvings} halvings")
    return False


def train(
    dataset,
    config: Optional[TrainConfig] = None,
    init: Optional[Tuple[ModelParams, Optional[Certificate]]] = None,
    settings: Optional[SolverSettings] = None,
    callback: Optional[Callable[[TrainState], None]] = None,
) -> TrainResult:
    """Fit a Lur'e model to trajectories.

    Example:

    ```python
    from lureid.datasets import GenConfig, generate
    from lureid.trainer import TrainConfig, train

    data = generate(GenConfig(n_sin=4, n_noise=4, n_sin_zero=2, n_noise_zero=2, seed=3))
    params, cert, state = train(data, TrainConfig(mode="gensec", epochs=3))
    assert cert is not None and len(state.history) == 4
    ```

    Args:
        dataset: a Dataset, or a list of Trajectory objects
        config (TrainConfig): hyperparameters
        init (tuple): optional (ModelParams, Certificate) starting point. Without it the
            constrained modes start from sdp.initialize and nosec from default_nosec_init.
        settings (SolverSettings): settings of the initialization and restoration programs
        callback (callable): called with the state after every epoch

    Returns:
        TrainResult, unpacking as (params, certificate or None, state)
    """
    config = config or TrainConfig()
    settings = settings or SolverSettings()
    trajectories = _data(dataset)
    delta = _resolve_delta(dataset, trajectories, config)
    data = TrajectoryBatch.from_trajectories(trajectories)
    n, r, e = data.x0.shape[1], data.u.shape[2], data.y.shape[2]
    dims = init[0].dims if init is not None else Dimensions(n=config.n_states, r=r, e=e, m=config.n_channels)
    if dims.n != n or dims.r != r or dims.e != e:
        raise ConfigurationError(f"model dimensions {dims} do not match the data (n={n}, r={r}, e={e})")

    omega = _initial_omega(dims, delta, config, init, settings)
    state = TrainState(omega=omega, moments=AdamMoments.zeros(omega.size), nu=config.nu0)
    total, mse_part, barrier_part = training_loss(omega, data, state.nu, delta, mode=config.mode)
    if not np.isfinite(total):
        raise ConfigurationError("the loss is infinite at the initial point; re-initialize with sdp.initialize")
    state.snapshot = omega.copy() if config.constrained else None
    state.history.append(
        {
            "epoch": 0,
            "mse": mse_part,
            "barrier": barrier_part,
            "total": total,
            "nu": state.nu,
            "feasible": config.constrained,
            "restored": False,
            "rolled_back": False,
        }
    )
    logger.info(f"{config.mode}: initial mse {mse_part:.6g}, barrier {barrier_part:.6g}, delta {delta:.6g}")

    for epoch in range(1, config.epochs + 1):
        state.epoch = epoch
        order = philox_rng(config.seed, epoch).permutation(len(data))
        losses = []
        force_check = False
        for start in range(0, len(order), config.batch_size):
            batch = data.subset(order[start : start + config.batch_size])
            losses.append(training_loss(state.omega, batch, state.nu, delta, mode=config.mode))
            if not _descend(state, batch, config, delta):
                force_check = True

        flags = {"feasible": False, "restored": False, "rolled_back": False}
        if config.constrained and (epoch % config.check_every == 0 or force_check or epoch == config.epochs):
            flags = _verify_or_restore(state, config, delta, settings)
        losses = np.array(losses)
        record = {
            "epoch": epoch,
            "mse": float(losses[:, 1].mean()),
            "barrier": float(losses[:, 2].mean()),
            "total": float(losses[:, 0].mean()),
            "nu": state.nu,
            **flags,
        }
        state.history.append(record)
        logger.info(
            f"{config.mode} epoch {epoch}: mse {record['mse']:.6g}, barrier {record['barrier']:.6g}, "
            f"nu {state.nu:.3g}"
        )
        state.nu = max(config.nu_min, state.nu * config.nu_decay)
        if callback is not None:
            callback(state)

    params = state.omega.params
    certificate = state.omega.certificate() if config.constrained else None
    return TrainResult(params=params, certificate=certificate, state=state, delta=delta)
