"""
The three semidefinite programs of the identification pipeline.

- feasibility_restore: model fixed, search P, L, M for given s and alpha
- initialize: a feasible starting model and certificate
- post_process: model fixed, maximize the region scale s through s_hat = 1/s^2
"""

import logging
from typing import Optional, Tuple

import cvxpy as cp
import numpy as np

from lureid.certificate.certificate import Certificate, check_certificate
from lureid.model.model import Dimensions, ModelParams
from lureid.sdp.problem import SdpProblem, SdpSolution, SdpStatus, SolverSettings
from lureid.utils.arrayfuncs import sym
from lureid.utils.exceptions import ConfigurationError, InfeasibleError, NumericalFailureError
from lureid.utils.rng import philox_rng
from lureid.utils.validation import check_positive, check_unit_interval

logger = logging.getLogger(__name__)

INIT_ALPHA = 0.99
INIT_A_SCALE = 0.9
INIT_S_INFLATION = 0.01

INIT_OBJECTIVES = ("feasibility", "max_margin")


def f_expression(A, B, B2, C2, D21, P, L, M, alpha):
    """The stability LMI matrix as a cvxpy expression (affine when alpha is fixed)."""
    n, r = B.shape
    Zr = np.zeros((n, r))
    return cp.bmat(
        [
            [-(alpha**2) * P, Zr, P @ C2.T + L.T, P @ A.T],
            [Zr.T, -np.eye(r), D21.T, B.T],
            [C2 @ P + L, D21, -2.0 * M, M @ B2.T],
            [A @ P, B, B2 @ M, -P],
        ]
    )


def g_expression(s_hat, l_i, P):
    """Channel containment matrix [[s_hat, l_i], [l_i', P]] as a cvxpy expression."""
    l_row = cp.reshape(l_i, (1, P.shape[0]), order="C")
    return cp.bmat([[cp.reshape(s_hat, (1, 1), order="C"), l_row], [l_row.T, P]])


def _certificate_variables(problem: SdpProblem, dims: Dimensions, fix_L_zero: bool):
    P = problem.add_symmetric("P", dims.n)
    M = problem.add_diagonal("mu", dims.m)
    L = cp.Constant(np.zeros((dims.m, dims.n))) if fix_L_zero else problem.add_matrix("L", (dims.m, dims.n))
    return P, L, M


def _add_region_constraints(problem: SdpProblem, s_hat, P, L, m: int, margin: float) -> None:
    for i in range(m):
        problem.add_lmi(f"G_{i + 1}", g_expression(s_hat, L[i, :], P), lower=0.0, margin=margin)


def _raise_for_status(problem: SdpProblem, solution: SdpSolution, settings: SolverSettings) -> None:
    if solution.status == SdpStatus.INFEASIBLE:
        lmi = problem.locate_infeasibility(settings)
        raise InfeasibleError(
            f"{problem.name}: the program is infeasible (first failing constraint group: {lmi or 'unknown'})",
            lmi=lmi,
            solution=solution,
        )
    if solution.status == SdpStatus.NUMERICAL_FAILURE:
        raise NumericalFailureError(
            f"{problem.name}: solver failed ({solution.diagnostics.get('cvxpy_status', 'error')})",
            solution=solution,
        )


def _certificate_from(solution: SdpSolution, dims: Dimensions, s: float, alpha: float) -> Certificate:
    values = solution.values
    L = values["L"] if "L" in values else np.zeros((dims.m, dims.n))
    return Certificate(P=sym(values["P"]), L=L, M=values["mu"], s=s, alpha=alpha)


def _verified(problem, solution, params, cert, delta) -> Certificate:
    report = check_certificate(params, cert, delta)
    if not report.passed:
        raise NumericalFailureError(
            f"{problem.name}: solver output fails verification ({report.failed_conditions()})",
            solution=solution,
        )
    return cert


def feasibility_problem(
    params: ModelParams, s: float, alpha: float, settings: SolverSettings, fix_L_zero: bool = False
) -> SdpProblem:
    """The restoration program for fixed params, s and alpha."""
    dims = params.dims
    problem = SdpProblem("feasibility_restore")
    P, L, M = _certificate_variables(problem, dims, fix_L_zero)
    F = f_expression(params.A, params.B, params.B2, params.C2, params.D21, P, L, M, alpha)
    problem.add_lmi("F", F, upper=0.0, margin=settings.margin)
    _add_region_constraints(problem, cp.Constant(1.0 / s**2), P, L, dims.m, settings.margin)
    return problem


def feasibility_restore(
    params: ModelParams,
    s: float,
    alpha: float,
    delta: float,
    settings: Optional[SolverSettings] = None,
    fix_L_zero: bool = False,
) -> Certificate:
    """Find P, L, M certifying a fixed model for the given s and alpha.

    Args:
        params (ModelParams): the model, kept fixed
        s (float): region scale, kept fixed
        alpha (float): contraction rate in (0, 1), kept fixed
        delta (float): input bound; must satisfy delta^2 <= (1 - alpha^2) s^2
        settings (SolverSettings): solver settings
        fix_L_zero (bool): restrict to L = 0 (standard sector conditions)

    Returns:
        Certificate passing check_certificate

    Raises:
        InfeasibleError: no certificate exists for these s and alpha
        NumericalFailureError: the solver failed or its output does not verify
    """
    settings = settings or SolverSettings()
    check_unit_interval(alpha, "alpha")
    check_positive(s, "s")
    check_positive(delta, "delta", allow_zero=True)
    if delta**2 > (1.0 - alpha**2) * s**2:
        raise InfeasibleError(
            f"delta={delta} exceeds the admissible bound sqrt(1 - alpha^2) s = {np.sqrt(1 - alpha**2) * s}",
            lmi="delta",
        )
    problem = feasibility_problem(params, s, alpha, settings, fix_L_zero=fix_L_zero)
    solution = problem.solve(settings)
    _raise_for_status(problem, solution, settings)
    cert = _certificate_from(solution, params.dims, s, alpha)
    return _verified(problem, solution, params, cert, delta)


def initial_model(dims: Dimensions, seed: int) -> ModelParams:
    """The fixed part of the initial model: A = 0.9 I, C = [I, 0], C2 uniform in (-1, 1), the rest zero."""
    if dims.e > dims.n:
        raise ConfigurationError(f"initialization requires e <= n, got e={dims.e} and n={dims.n}")
    rng = philox_rng(seed)
    params = ModelParams.zeros(n=dims.n, r=dims.r, e=dims.e, m=dims.m)
    return params.replace(
        A=INIT_A_SCALE * np.eye(dims.n),
        C=np.eye(dims.e, dims.n),
        C2=rng.uniform(-1.0, 1.0, size=(dims.m, dims.n)),
    )


def initial_scale(delta: float, alpha: float = INIT_ALPHA) -> float:
    """Region scale slightly above the smallest one admitting inputs bounded by delta."""
    return (1.0 + INIT_S_INFLATION) * np.sqrt(delta**2 / (1.0 - alpha**2))


def initialize(
    dims: Dimensions,
    delta: float,
    beta: Optional[float] = None,
    seed: int = 0,
    settings: Optional[SolverSettings] = None,
    objective: str = "feasibility",
    fix_L_zero: bool = False,
) -> Tuple[ModelParams, Certificate]:
    """A feasible starting point for training.

    With alpha = 0.99, A = 0.9 I, C = [I, 0], random C2 and B2 = D = D12 = 0, the stability
    LMI is affine in (P, L, M, B, D21), which are found by one semidefinite program.

    Args:
        dims (Dimensions): model dimensions; requires e <= n
        delta (float): input bound, positive
        beta (float): optional radius of a ball that must lie in the certified region
        seed (int): seed for C2
        settings (SolverSettings): solver settings
        objective (str): "feasibility" for a pure feasibility program, or "max_margin" to
            maximize the definiteness margin of the stability LMI
        fix_L_zero (bool): restrict to L = 0

    Returns:
        tuple of (ModelParams, Certificate)
    """
    settings = settings or SolverSettings()
    check_positive(delta, "delta")
    if beta is not None:
        check_positive(beta, "beta", allow_zero=True)
    if objective not in INIT_OBJECTIVES:
        raise ConfigurationError(f"objective must be one of {INIT_OBJECTIVES}, got {objective!r}")
    fixed = initial_model(dims, seed)
    alpha = INIT_ALPHA
    s = initial_scale(delta, alpha)

    problem = SdpProblem("initialize")
    P, L, M = _certificate_variables(problem, dims, fix_L_zero)
    B = problem.add_matrix("B", (dims.n, dims.r))
    D21 = problem.add_matrix("D21", (dims.m, dims.r))
    F = f_expression(fixed.A, B, fixed.B2, fixed.C2, D21, P, L, M, alpha)
    if objective == "max_margin":
        t = problem.add_scalar("t")
        problem.add_constraints("F", [0.5 * (F + F.T) << -(settings.margin + t) * np.eye(F.shape[0])])
        problem.add_constraints("margin", [t >= 0, t <= 1])
        problem.minimize(-t)
    else:
        problem.add_lmi("F", F, upper=0.0, margin=settings.margin)
    _add_region_constraints(problem, cp.Constant(1.0 / s**2), P, L, dims.m, settings.margin)
    if beta:
        problem.add_lmi("ball", s**2 * P - beta**2 * np.eye(dims.n), lower=0.0)

    solution = problem.solve(settings)
    _raise_for_status(problem, solution, settings)
    params = fixed.replace(B=solution.values["B"], D21=solution.values["D21"])
    cert = _certificate_from(solution, dims, s, alpha)
    cert = _verified(problem, solution, params, cert, delta)
    logger.info(f"initialized model with seed {seed}: s={s:.6g}, alpha={alpha}")
    return params, cert


def region_problem(
    params: ModelParams, alpha: float, delta: float, settings: SolverSettings, fix_L_zero: bool = False
) -> SdpProblem:
    """The region maximization program: minimize s_hat = 1/s^2."""
    dims = params.dims
    problem = SdpProblem("post_process")
    s_hat = problem.add_scalar("s_hat")
    P, L, M = _certificate_variables(problem, dims, fix_L_zero)
    F = f_expression(params.A, params.B, params.B2, params.C2, params.D21, P, L, M, alpha)
    problem.add_lmi("F", F, upper=0.0, margin=settings.margin)
    _add_region_constraints(problem, s_hat, P, L, dims.m, settings.margin)
    problem.add_constraints(
        "delta",
        [delta**2 * s_hat <= (1.0 - alpha**2) - settings.margin, s_hat >= settings.s_hat_min],
    )
    problem.minimize(s_hat)
    return problem


def post_process(
    params: ModelParams,
    alpha: float,
    delta: float,
    settings: Optional[SolverSettings] = None,
    fix_L_zero: bool = False,
) -> Certificate:
    """Certificate with the largest region scale s for a fixed model.

    Example:

    ```python
    from lureid.datasets import true_system
    from lureid.sdp import post_process

    cert = post_process(true_system(), alpha=0.97, delta=0.1)
    assert cert.s > 0 and abs(cert.L).max() > 0
    ```

    Args:
        params (ModelParams): the model, kept fixed
        alpha (float): contraction rate in (0, 1)
        delta (float): input bound
        settings (SolverSettings): solver settings
        fix_L_zero (bool): restrict to L = 0

    Returns:
        Certificate with s = 1/sqrt(s_hat*)
    """
    settings = settings or SolverSettings()
    check_unit_interval(alpha, "alpha")
    check_positive(delta, "delta", allow_zero=True)
    problem = region_problem(params, alpha, delta, settings, fix_L_zero=fix_L_zero)
    solution = problem.solve(settings)
    _raise_for_status(problem, solution, settings)
    s_hat = float(solution.values["s_hat"])
    if not s_hat > 0:
        raise NumericalFailureError(f"post_process: non-positive s_hat {s_hat}", solution=solution)
    cert = _certificate_from(solution, params.dims, 1.0 / np.sqrt(s_hat), alpha)
    cert = _verified(problem, solution, params, cert, delta)
    logger.info(f"post_process: s={cert.s:.6g} at alpha={alpha}")
    return cert
