import numpy as np
import pytest

import lureid
import lureid.certificate
import lureid.datasets
import lureid.metrics
import lureid.model
import lureid.reporting
import lureid.sdp
import lureid.sector
import lureid.trainer
from lureid.datasets import GenConfig, generate, true_system
from lureid.model import Dimensions
from lureid.sdp import initialize, post_process

# List of all classes and functions we want tested for the docstrings
CLASSES_TO_TEST = [
    lureid.LureIdentifier,
    lureid.certificate.Certificate,
    lureid.sdp.SdpProblem,
    lureid.trainer.Omega,
    lureid.trainer.TrainConfig,
]
FUNCTIONS_TO_TEST = [
    lureid.model.deadzone,
    lureid.model.simulate,
    lureid.metrics.mse,
    lureid.sector.gamma,
    lureid.sector.ellipsoid_boundary_2d,
    lureid.sector.polytope_segments_2d,
    lureid.certificate.build_F,
    lureid.certificate.check_certificate,
    lureid.certificate.iss_bound,
    lureid.sdp.post_process,
    lureid.trainer.barrier,
    lureid.trainer.adam_step,
    lureid.trainer.count_parameters,
    lureid.trainer.train,
    lureid.datasets.true_system,
    lureid.datasets.generate,
    lureid.reporting.evaluate,
]

ALPHA_TRUE = 0.97

SMALL_GEN_CONFIG = dict(n_sin=6, n_noise=6, n_sin_zero=3, n_noise_zero=3, length=50, seed=11)


@pytest.fixture(scope="session")
def true_params():
    """The data-generating system."""
    return true_system()


@pytest.fixture(scope="session")
def small_dataset():
    """A seeded dataset of 18 trajectories."""
    return generate(GenConfig(**SMALL_GEN_CONFIG))


@pytest.fixture(scope="session")
def true_certificate(true_params, small_dataset):
    """Region-maximizing certificate of the data-generating system."""
    return post_process(true_params, ALPHA_TRUE, small_dataset.delta)


@pytest.fixture(scope="session")
def init_dims():
    """Dimensions used for initialization and training tests."""
    return Dimensions(n=2, r=1, e=1, m=2)


@pytest.fixture(scope="session")
def initial_point(init_dims):
    """A feasible initial model and certificate with delta = 1."""
    return initialize(init_dims, delta=1.0, beta=1.0, seed=0)


@pytest.fixture()
def rng():
    """A fresh seeded generator per test."""
    return np.random.default_rng(1234)
