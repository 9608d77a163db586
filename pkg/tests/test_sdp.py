import json

import numpy as np
import pytest

from lureid.certificate import check_certificate
from lureid.model import Dimensions, ModelParams
from lureid.sdp import (
    SdpProblem,
    SdpSolution,
    SdpStatus,
    SolverSettings,
    feasibility_restore,
    initial_model,
    initial_scale,
    initialize,
    post_process,
)
from lureid.utils.exceptions import ConfigurationError, InfeasibleError

from tests.conftest import ALPHA_TRUE


def test_solver_settings_validation():
    """Settings are checked and the solver name is normalized."""
    assert SolverSettings(solver="clarabel").solver == "CLARABEL"
    assert SolverSettings().solver_options()["tol_feas"] == 1e-9
    with pytest.raises(ConfigurationError):
        SolverSettings(margin=-1.0)
    with pytest.raises(ConfigurationError):
        SolverSettings(s_hat_min=0.0)


def test_solution_values_iff_optimal():
    """An optimal solution carries values, other statuses do not."""
    with pytest.raises(ValueError):
        SdpSolution(status=SdpStatus.OPTIMAL)
    with pytest.raises(ValueError):
        SdpSolution(status=SdpStatus.INFEASIBLE, values={"P": np.eye(2)})


def test_add_lmi_needs_one_side():
    """Exactly one of upper and lower."""
    problem = SdpProblem("bad")
    P = problem.add_symmetric("P", 2)
    with pytest.raises(ConfigurationError):
        problem.add_lmi("both", P, upper=0.0, lower=0.0)
    with pytest.raises(ConfigurationError):
        problem.add_symmetric("P", 2)


def test_problem_reports_infeasible():
    """P >= I and P <= 0 cannot both hold."""
    problem = SdpProblem("contradiction")
    P = problem.add_symmetric("P", 2)
    problem.add_lmi("lower", P, lower=1.0)
    problem.add_lmi("upper", P, upper=0.0)
    assert problem.solve().status == SdpStatus.INFEASIBLE
    assert problem.locate_infeasibility() == "upper"


def test_problem_dump(tmp_path):
    """The conic data is written as self-describing JSON."""
    problem = SdpProblem("lyapunov")
    P = problem.add_symmetric("P", 2)
    problem.add_lmi("decrease", 0.25 * P - P, upper=0.0, margin=1e-6)
    problem.add_lmi("positivity", P, lower=1.0)
    doc = problem.to_dict()
    assert doc["name"] == "lyapunov"
    assert [(v["name"], v["kind"]) for v in doc["variables"]] == [("P", "symmetric")]
    assert set(doc["constraint_groups"]) == {"decrease", "positivity"}
    assert {"row", "col", "val", "shape"} <= set(doc["conic_data"]["A"])
    path = tmp_path / "sdp.json"
    problem.dump(path)
    with open(path) as f:
        assert json.load(f)["schema_version"] == 1


def test_restore_zero_model():
    """The zero model has a certificate at alpha = 0.9, s = 1."""
    params = ModelParams.zeros(n=2, r=1, e=1, m=2)
    cert = feasibility_restore(params, s=1.0, alpha=0.9, delta=0.1)
    assert cert.s == 1.0
    assert cert.alpha == 0.9
    assert check_certificate(params, cert, 0.1).passed


def test_restore_unstable_model():
    """A = 1.5 I admits no certificate; the stability LMI is named."""
    params = ModelParams.zeros(n=2, r=1, e=1, m=1).replace(A=1.5 * np.eye(2))
    with pytest.raises(InfeasibleError) as excinfo:
        feasibility_restore(params, s=1.0, alpha=0.9, delta=0.1)
    assert excinfo.value.lmi == "F"


def test_restore_rejects_large_delta():
    """The scalar input condition is checked before solving."""
    params = ModelParams.zeros(n=2, r=1, e=1, m=2)
    with pytest.raises(InfeasibleError) as excinfo:
        feasibility_restore(params, s=1.0, alpha=0.9, delta=1.0)
    assert excinfo.value.lmi == "delta"
    with pytest.raises(ConfigurationError):
        feasibility_restore(params, s=1.0, alpha=1.0, delta=0.1)


def test_post_process_zero_model():
    """For the zero model nothing but the floor on s_hat limits the region."""
    settings = SolverSettings()
    cert = post_process(ModelParams.zeros(n=2, r=1, e=1, m=2), alpha=0.9, delta=0.1, settings=settings)
    s_max = 1.0 / np.sqrt(settings.s_hat_min)
    assert 0.5 * s_max <= cert.s <= 1.1 * s_max
    assert 0.1**2 <= (1.0 - 0.9**2) * cert.s**2


def test_post_process_true_system(true_params, true_certificate, small_dataset):
    """The data-generating system gets a verified certificate with L != 0."""
    assert true_certificate.alpha == ALPHA_TRUE
    assert np.abs(true_certificate.L).max() > 0
    report = check_certificate(true_params, true_certificate, small_dataset.delta)
    assert report.passed
    assert small_dataset.delta**2 <= (1.0 - ALPHA_TRUE**2) * true_certificate.s**2


def test_post_process_stdsec_region_is_smaller(true_params, true_certificate, small_dataset):
    """Fixing L = 0 can only shrink the certified region."""
    try:
        std = post_process(true_params, ALPHA_TRUE, small_dataset.delta, fix_L_zero=True)
    except InfeasibleError:
        return
    assert not std.L.any()
    assert std.s <= true_certificate.s * (1 + 1e-3)


def test_post_process_dominates_restore(true_params, true_certificate, small_dataset):
    """The maximized scale is at least that of any restorable certificate."""
    s = 0.5 * true_certificate.s
    delta = small_dataset.delta
    if delta**2 > (1.0 - ALPHA_TRUE**2) * s**2:
        s = true_certificate.s
    restored = feasibility_restore(true_params, s=s, alpha=ALPHA_TRUE, delta=delta)
    assert true_certificate.s >= restored.s * (1 - 1e-6)


def test_post_process_unstable_model():
    """No region exists for A = 1.5 I."""
    params = ModelParams.zeros(n=2, r=1, e=1, m=1).replace(A=1.5 * np.eye(2))
    with pytest.raises(InfeasibleError):
        post_process(params, alpha=0.9, delta=0.1)


def test_initial_model_structure():
    """A = 0.9 I, C = [I, 0], C2 in (-1, 1), the rest zero."""
    params = initial_model(Dimensions(n=3, r=1, e=2, m=2), seed=4)
    np.testing.assert_array_equal(params.A, 0.9 * np.eye(3))
    np.testing.assert_array_equal(params.C, [[1, 0, 0], [0, 1, 0]])
    assert np.all(np.abs(params.C2) < 1)
    for name in ("B", "B2", "D", "D12", "D21"):
        assert not getattr(params, name).any()


def test_initial_scale():
    """One percent above sqrt(delta^2 / (1 - alpha^2))."""
    assert initial_scale(1.0, 0.99) == pytest.approx(1.01 / np.sqrt(1 - 0.99**2))


def test_initialize_feasible_with_ball(init_dims, initial_point):
    """The starting point verifies and its region holds the unit ball."""
    params, cert = initial_point
    report = check_certificate(params, cert, delta=1.0)
    assert report.passed
    assert report.delta_ok
    X = cert.region().X
    for x in np.eye(2):
        assert x @ X @ x <= 1.0 + 1e-6
    assert cert.alpha == 0.99
    assert cert.s == pytest.approx(initial_scale(1.0))


def test_initialize_over_seeds(init_dims):
    """Different seeds draw different C2 and all verify."""
    C2s = []
    for seed in range(10):
        params, cert = initialize(init_dims, delta=1.0, seed=seed)
        assert check_certificate(params, cert, 1.0).passed
        C2s.append(params.C2)
    assert not np.array_equal(C2s[0], C2s[1])


def test_initialize_is_deterministic(init_dims, initial_point):
    """Same inputs, same outputs."""
    params, cert = initialize(init_dims, delta=1.0, beta=1.0, seed=0)
    assert params == initial_point[0]
    np.testing.assert_array_equal(cert.P, initial_point[1].P)


def test_initialize_max_margin(init_dims):
    """The margin-maximizing variant verifies too."""
    params, cert = initialize(init_dims, delta=1.0, seed=2, objective="max_margin")
    assert check_certificate(params, cert, 1.0).passed
    with pytest.raises(ConfigurationError):
        initialize(init_dims, delta=1.0, objective="steepest")


def test_initialize_requires_e_not_above_n():
    """C = [I, 0] needs e <= n."""
    with pytest.raises(ConfigurationError):
        initialize(Dimensions(n=1, r=1, e=2, m=1), delta=1.0)
