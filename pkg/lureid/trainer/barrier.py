"""
Log-det barrier of the certificate conditions and its gradient.

    phi(C) = -log det(-C)  if C is negative definite, +inf otherwise

The barrier part of the training loss is

    phi(F) + sum_i phi(-G_i) + phi(delta^2 - (1 - alpha^2) sigma) + phi(alpha - 1) + phi(-alpha) + phi(-sigma)

with sigma = s^2. The last three terms keep alpha in (0, 1) and sigma positive.
"""

from typing import Dict

import numpy as np
import scipy.linalg

from lureid.certificate.certificate import containment_matrix, stability_matrix
from lureid.trainer.parameters import Omega

INFINITY = float("inf")


def _cholesky(X):
    try:
        return scipy.linalg.cholesky(X, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError):
        return None


def barrier(C) -> float:
    """-log det(-C) when C is negative definite, else +inf. Scalars are 1 x 1 matrices.

    ```python
    import numpy as np
    from lureid.trainer import barrier

    assert barrier(-np.eye(2)) == 0.0
    assert abs(barrier(-2.0) + np.log(2.0)) < 1e-15
    assert barrier(1.0) == float("inf")
    ```
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    factor = _cholesky(-C)
    if factor is None:
        return INFINITY
    return float(-2.0 * np.sum(np.log(np.diag(factor))))


def _inverse_from_cholesky(factor):
    return scipy.linalg.cho_solve((factor, True), np.eye(factor.shape[0]))


def _scalar_arguments(omega: Omega, delta: float) -> Dict[str, float]:
    alpha, sigma = omega.alpha, omega.sigma
    return {
        "delta": delta**2 - (1.0 - alpha**2) * sigma,
        "alpha_upper": alpha - 1.0,
        "alpha_lower": -alpha,
        "sigma": -sigma,
    }


def barrier_terms(omega: Omega, delta: float) -> Dict[str, float]:
    """Every barrier term by name: F, G_1..G_m, delta, alpha_upper, alpha_lower, sigma."""
    terms = {}
    for name, value in _scalar_arguments(omega, delta).items():
        terms[name] = barrier(value)
    if not np.isfinite(terms["sigma"]):
        # containment matrices need 1/sigma
        terms["F"] = INFINITY
        return terms
    params = omega.params
    P = omega.P_sym
    terms["F"] = barrier(stability_matrix(params, P, omega["L"], np.diag(omega["mu"]), omega.alpha))
    for i in range(omega.dims.m):
        terms[f"G_{i + 1}"] = barrier(-containment_matrix(1.0 / omega.sigma, omega["L"][i], P))
    return terms


def barrier_value(omega: Omega, delta: float) -> float:
    """Sum of barrier_terms; +inf as soon as one term is infinite."""
    total = 0.0
    for value in barrier_terms(omega, delta).values():
        if not np.isfinite(value):
            return INFINITY
        total += value
    return total


def barrier_gradient(omega: Omega, delta: float) -> Omega:
    """Gradient of barrier_value with respect to every block of omega.

    Requires a finite barrier. The log-det terms use d[-log det(-C)] = <(-C)^-1, dC>
    chained through the block structure of F and G_i.
    """
    dims = omega.dims
    n, r, m = dims.n, dims.r, dims.m
    params = omega.params
    P = omega.P_sym
    L, mu, alpha, sigma = omega["L"], omega["mu"], omega.alpha, omega.sigma
    M = np.diag(mu)
    grad = omega.zeros_like()

    F = stability_matrix(params, P, L, M, alpha)
    factor = _cholesky(-F)
    if factor is None:
        raise ValueError("barrier gradient requested at a point where F is not negative definite")
    W = _inverse_from_cholesky(factor)
    i1, i2, i3 = n, n + r, n + r + m
    W11, W13, W14 = W[:i1, :i1], W[:i1, i2:i3], W[:i1, i3:]
    W23, W24 = W[i1:i2, i2:i3], W[i1:i2, i3:]
    W33, W34 = W[i2:i3, i2:i3], W[i2:i3, i3:]
    W44 = W[i3:, i3:]

    gP = -(alpha**2) * W11 + 2.0 * W13 @ params.C2 + 2.0 * W14 @ params.A - W44
    grad["L"] = 2.0 * W13.T
    grad["mu"] = -2.0 * np.diag(W33) + 2.0 * np.diag(W34 @ params.B2)
    grad["alpha"] = -2.0 * alpha * np.sum(W11 * P)
    grad["A"] = 2.0 * W14.T @ P
    grad["C2"] = 2.0 * W13.T @ P
    grad["B"] = 2.0 * W24.T
    grad["D21"] = 2.0 * W23.T
    grad["B2"] = 2.0 * W34.T @ M

    g_sigma = 0.0
    gL = grad["L"].copy()
    for i in range(m):
        G = containment_matrix(1.0 / sigma, L[i], P)
        g_factor = _cholesky(G)
        if g_factor is None:
            raise ValueError(f"barrier gradient requested at a point where G_{i + 1} is not positive definite")
        V = _inverse_from_cholesky(g_factor)
        g_sigma += V[0, 0] / sigma**2
        gL[i] += -2.0 * V[0, 1:]
        gP += -V[1:, 1:]
    grad["L"] = gL

    slack = (1.0 - alpha**2) * sigma - delta**2
    g_sigma += -(1.0 - alpha**2) / slack - 1.0 / sigma
    g_alpha = 2.0 * alpha * sigma / slack + 1.0 / (1.0 - alpha) - 1.0 / alpha
    grad["sigma"] = g_sigma
    grad["alpha"] = grad["alpha"] + g_alpha
    # P enters through sym(P)
    grad["P"] = 0.5 * (gP + gP.T)
    return grad
