import warnings

import numpy as np

from lureid.utils.exceptions import CertificateWarning, ConfigurationError


def check_symmetric(X, name="matrix", rtol=1e-10):
    """
    Checks that X is square and symmetric up to a relative tolerance.
    """
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ConfigurationError(f"{name} must be square, got shape {X.shape}")
    scale = max(np.abs(X).max(), 1.0)
    if np.abs(X - X.T).max() > rtol * scale:
        raise ConfigurationError(f"{name} is not symmetric (relative asymmetry above {rtol})")
    return X


def check_unit_interval(value, name):
    """Checks that a scalar lies strictly between 0 and 1."""
    if not 0 < value < 1:
        raise ConfigurationError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_positive(value, name, allow_zero=False):
    """Checks that a scalar is positive (or non-negative when allow_zero)."""
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ConfigurationError(f"{name} must be {bound}, got {value}")
    return value


def warn_failed_checks(report):
    """Warns with the names of the certificate conditions that failed."""
    failed = report.failed_conditions()
    if failed:
        warnings.warn(CertificateWarning(f"Certificate conditions not satisfied: {failed}"))
    return failed
