import logging
import warnings
from typing import Optional

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from lureid.certificate.certificate import Certificate, check_certificate
from lureid.reporting.report import EvalReport, evaluate, predict
from lureid.sdp.problem import SolverSettings
from lureid.sdp.programs import post_process
from lureid.trainer.trainer import TrainConfig, train
from lureid.utils.exceptions import CertificateWarning, InfeasibleError, NumericalFailureError
from lureid.utils.validation import warn_failed_checks

logger = logging.getLogger(__name__)


class LureIdentifier(BaseEstimator):
    """Scikit-learn-like estimator that identifies a regionally stable Lur'e model.

    Fitting runs the initialization program, barrier-constrained training and, for the
    constrained modes, the region maximization program.

    ```python
    from lureid import LureIdentifier
    from lureid.datasets import GenConfig, generate

    data = generate(GenConfig(n_sin=4, n_noise=4, n_sin_zero=2, n_noise_zero=2, seed=5))
    model = LureIdentifier(mode="gensec", epochs=2)
    model.fit(data)
    assert model.report_.passed
    predictions = model.predict(data)
    ```

    Comparing the unconstrained model on the same data:

    ```python
    from lureid import LureIdentifier
    from lureid.datasets import GenConfig, generate

    data = generate(GenConfig(n_sin=4, n_noise=4, n_sin_zero=2, n_noise_zero=2, seed=5))
    model = LureIdentifier(mode="nosec", epochs=2).fit(data)
    assert model.certificate_ is None
    ```
    """

    def __init__(
        self,
        mode: str = "gensec",
        *,
        n_states: int = 2,
        n_channels: int = 2,
        epochs: int = 500,
        batch_size: int = 32,
        learning_rate: float = 1e-3,
        nu0: float = 1e-3,
        nu_decay: float = 0.999,
        delta: Optional[float] = None,
        check_every: int = 1,
        init_beta: Optional[float] = None,
        random_state: int = 0,
        maximize_region: bool = True,
        solver: str = "CLARABEL",
    ):
        """
        Init the class.

        Args:
            mode (str): "gensec", "stdsec" or "nosec"
            n_states (int): state dimension n
            n_channels (int): number of deadzone channels m
            epochs (int): training epochs
            batch_size (int): trajectories per optimizer step
            learning_rate (float): Adam step size
            nu0 (float): initial barrier weight
            nu_decay (float): barrier weight decay per epoch
            delta (float): input bound; None takes max |u| of the training data
            check_every (int): epochs between certificate checks
            init_beta (float): radius of a ball the initial region must contain
            random_state (int): seed of initialization and shuffling
            maximize_region (bool): run the region maximization program after training
            solver (str): cvxpy solver for all semidefinite programs
        """
        self.mode = mode
        self.n_states = n_states
        self.n_channels = n_channels
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.nu0 = nu0
        self.nu_decay = nu_decay
        self.delta = delta
        self.check_every = check_every
        self.init_beta = init_beta
        self.random_state = random_state
        self.maximize_region = maximize_region
        self.solver = solver

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            mode=self.mode,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            nu0=self.nu0,
            nu_decay=self.nu_decay,
            delta=self.delta,
            check_every=self.check_every,
            seed=self.random_state,
            n_states=self.n_states,
            n_channels=self.n_channels,
            init_beta=self.init_beta,
        )

    def fit(self, X, y=None):
        """Train on a Dataset or a list of Trajectory objects.

        Args:
            X: training data
            y: ignored; outputs are part of the trajectories
        """
        config = self._train_config()
        self.settings_ = SolverSettings(solver=self.solver)
        result = train(X, config, settings=self.settings_)
        self.params_ = result.params
        self.certificate_ = result.certificate
        self.delta_ = result.delta
        self.history_ = result.history
        self.train_state_ = result.state
        self.report_ = None
        if self.certificate_ is not None:
            if self.maximize_region:
                self.analyze()
            else:
                self.report_ = check_certificate(self.params_, self.certificate_, self.delta_)
                warn_failed_checks(self.report_)
        return self

    def analyze(self, delta: Optional[float] = None) -> Optional[Certificate]:
        """Replace the certificate by the one with the largest region scale.

        The contraction rate of the current certificate is kept. If the program fails the
        training certificate stays in place and a CertificateWarning is raised.

        Args:
            delta (float): input bound; defaults to the one used in training

        Returns:
            the certificate in effect, None for nosec
        """
        check_is_fitted(self)
        if self.certificate_ is None:
            return None
        delta = self.delta_ if delta is None else delta
        try:
            self.certificate_ = post_process(
                self.params_,
                self.certificate_.alpha,
                delta,
                settings=self.settings_,
                fix_L_zero=self.mode == "stdsec",
            )
        except (InfeasibleError, NumericalFailureError) as e:
            warnings.warn(CertificateWarning(f"region maximization failed ({e}); keeping the training certificate"))
        self.report_ = check_certificate(self.params_, self.certificate_, delta)
        warn_failed_checks(self.report_)
        return self.certificate_

    def predict(self, X):
        """Simulated trajectories from the initial states and inputs of X, with states recorded.

        Args:
            X: a Dataset or a list of Trajectory objects

        Returns:
            list of Trajectory
        """
        check_is_fitted(self)
        return predict(self.params_, X).trajectories()

    def evaluate(self, X) -> EvalReport:
        """EvalReport of the fitted model on X."""
        check_is_fitted(self)
        return evaluate(self.params_, self.certificate_, X, mode=self.mode, delta=self.delta_)

    def score(self, X, y=None) -> float:
        """Negative NRMSE on X, so that larger is better."""
        return -self.evaluate(X).nrmse
