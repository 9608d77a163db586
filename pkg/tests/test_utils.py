import warnings

import numpy as np
import pytest

from lureid.certificate import Certificate, check_certificate
from lureid.model import ModelParams
from lureid.utils.arrayfuncs import (
    as_matrix,
    as_sequence,
    check_finite,
    cholesky_ok,
    upper_blocks_to_symmetric,
)
from lureid.utils.exceptions import CertificateWarning, ConfigurationError, DimensionalityError, NonFiniteError
from lureid.utils.rng import philox_rng
from lureid.utils.validation import (
    check_positive,
    check_symmetric,
    check_unit_interval,
    warn_failed_checks,
)


def test_as_matrix():
    """Scalars and vectors become 2d arrays."""
    assert as_matrix(3.0).shape == (1, 1)
    assert as_matrix([1.0, 2.0]).shape == (1, 2)
    assert as_matrix([1.0, 2.0], shape=(2, 1)).shape == (2, 1)
    with pytest.raises(DimensionalityError):
        as_matrix(np.zeros((2, 2)), shape=(2, 3))
    with pytest.raises(DimensionalityError):
        as_matrix(np.zeros((2, 2, 2)))


def test_as_sequence():
    """A 1d sequence is a single channel."""
    assert as_sequence([1.0, 2.0, 3.0], 1).shape == (3, 1)
    with pytest.raises(DimensionalityError):
        as_sequence(np.zeros((3, 2)), 1)


def test_check_finite():
    """NaN and inf are refused."""
    with pytest.raises(NonFiniteError):
        check_finite(np.array([1.0, np.inf]))


def test_upper_blocks_to_symmetric():
    """Lower blocks are exact transposes."""
    B = np.array([[1.0, 2.0]])
    out = upper_blocks_to_symmetric([[np.array([[5.0]]), B], [np.array([[1.0, 0.3], [0.3000000001, 2.0]])]])
    np.testing.assert_array_equal(out, out.T)
    np.testing.assert_array_equal(out[0, 1:], [1.0, 2.0])


def test_cholesky_ok():
    """Positive definite only."""
    assert cholesky_ok(np.eye(2))
    assert not cholesky_ok(np.diag([1.0, 0.0]))
    assert not cholesky_ok(np.diag([1.0, np.nan]))


def test_validation_helpers():
    """Symmetry, ranges and positivity."""
    with pytest.raises(ConfigurationError):
        check_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ConfigurationError):
        check_symmetric(np.zeros((2, 3)))
    assert check_unit_interval(0.5, "alpha") == 0.5
    with pytest.raises(ConfigurationError):
        check_unit_interval(1.0, "alpha")
    assert check_positive(0.0, "delta", allow_zero=True) == 0.0
    with pytest.raises(ConfigurationError):
        check_positive(0.0, "s")
    with pytest.raises(ConfigurationError):
        check_positive(np.inf, "s")


def test_warn_failed_checks():
    """A failing report raises a CertificateWarning naming the conditions."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1).replace(A=[[2.0]])
    cert = Certificate(P=[[1.0]], L=[[0.0]], M=[1.0], s=1.0, alpha=0.5)
    with pytest.warns(CertificateWarning, match="F"):
        assert warn_failed_checks(check_certificate(params, cert, 0.1)) == ["F"]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert warn_failed_checks(check_certificate(params.replace(A=[[0.0]]), cert, 0.1)) == []


def test_philox_substreams():
    """Substreams are reproducible and independent of consumption order."""
    a = philox_rng(5, 2).uniform(size=3)
    philox_rng(5, 1).uniform(size=100)
    np.testing.assert_array_equal(philox_rng(5, 2).uniform(size=3), a)
    assert not np.array_equal(philox_rng(5, 3).uniform(size=3), a)
    assert not np.array_equal(philox_rng(6, 2).uniform(size=3), a)
