import numpy as np
import pytest

from lureid.model import (
    DIVERGENCE_BOUND,
    Dimensions,
    ModelParams,
    Trajectory,
    deadzone,
    deadzone_derivative,
    simulate,
    simulate_batch,
    step,
)
from lureid.utils.exceptions import (
    ConfigurationError,
    DatasetFormatError,
    DimensionalityError,
    DivergenceWarning,
    NonFiniteError,
    SchemaVersionError,
)


def test_deadzone_branches():
    """Deadband, upper and lower branch."""
    assert deadzone(0.5) == 0.0
    assert deadzone(2.0) == 1.0
    assert deadzone(-3.0) == -2.0
    assert deadzone(1.0) == 0.0
    assert deadzone(-1.0) == 0.0


def test_deadzone_sector_and_saturation_identity(rng):
    """dzn(v) (v - dzn(v)) >= 0, |dzn(v)| <= |v| and dzn(v) = v - clip(v, -1, 1)."""
    v = rng.normal(scale=3.0, size=1000)
    dz = deadzone(v)
    assert np.all(dz * (v - dz) >= 0)
    assert np.all(np.abs(dz) <= np.abs(v))
    np.testing.assert_array_equal(dz, v - np.clip(v, -1.0, 1.0))


def test_deadzone_derivative_is_zero_on_closed_deadband():
    """The derivative at |v| = 1 is taken from the deadband side."""
    np.testing.assert_array_equal(deadzone_derivative([-2.0, -1.0, 0.0, 1.0, 1.5]), [1.0, 0.0, 0.0, 0.0, 1.0])


def test_dimensions_validation():
    """Dimensions must be positive."""
    with pytest.raises(ConfigurationError):
        Dimensions(n=0, r=1, e=1, m=1)


def test_model_params_shapes():
    """Inconsistent shapes and non-finite entries are rejected."""
    params = ModelParams.zeros(n=2, r=1, e=1, m=2)
    assert params.dims == Dimensions(n=2, r=1, e=1, m=2)
    with pytest.raises(DimensionalityError):
        params.replace(B=np.zeros((3, 1)))
    with pytest.raises(NonFiniteError):
        params.replace(A=np.array([[np.nan, 0.0], [0.0, 0.0]]))


def test_step_zero_model(rng):
    """The zero model maps everything to zero."""
    params = ModelParams.zeros(n=3, r=2, e=1, m=2)
    x_next, y_hat, v, w = step(params, rng.normal(size=3), rng.normal(size=2))
    for out in (x_next, y_hat, v, w):
        assert not out.any()


def test_step_origin_is_fixed(true_params):
    """x = 0, u = 0 is a fixed point."""
    x_next, y_hat, v, w = step(true_params, [0.0, 0.0], [0.0])
    np.testing.assert_array_equal(x_next, [0.0, 0.0])
    np.testing.assert_array_equal(y_hat, [0.0])


def test_step_true_system_outside_deadband(true_params):
    """Hand-evaluated step of the data-generating system from (10, 0)."""
    x_next, y_hat, v, w = step(true_params, [10.0, 0.0], [0.0])
    np.testing.assert_allclose(v, [1.8, 0.0], atol=1e-14)
    np.testing.assert_allclose(w, [0.8, 0.0], atol=1e-14)
    np.testing.assert_allclose(x_next, [10.31528, -0.18048], atol=1e-12)
    np.testing.assert_allclose(y_hat, [10.8], atol=1e-12)


def test_step_is_bit_reproducible(true_params, rng):
    """Repeated calls give identical results."""
    x, u = rng.normal(size=2), rng.normal(size=1)
    first = step(true_params, x, u)
    second = step(true_params, x, u)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)


def test_step_dimension_mismatch(true_params):
    """Wrong state length raises."""
    with pytest.raises(DimensionalityError):
        step(true_params, [1.0, 2.0, 3.0], [0.0])


def test_simulate_zero_input_at_origin(true_params):
    """The origin stays at rest."""
    traj = simulate(true_params, np.zeros(2), np.zeros((50, 1)), record_states=True)
    assert len(traj) == 50
    assert not traj.y.any()
    assert not traj.x.any()
    assert not traj.diverged


def test_simulate_matches_repeated_steps(true_params, rng):
    """simulate is the iteration of step."""
    x0, u = rng.uniform(-3, 3, size=2), rng.uniform(-0.5, 0.5, size=(20, 1))
    traj = simulate(true_params, x0, u, record_states=True)
    x = x0
    for k in range(20):
        np.testing.assert_allclose(traj.x[k], x, rtol=1e-13, atol=1e-13)
        x, y, _, _ = step(true_params, x, u[k])
        np.testing.assert_allclose(traj.y[k], y, rtol=1e-13, atol=1e-13)


def test_simulate_prefix_consistency(true_params, rng):
    """Simulating a prefix of the input gives the prefix of the outputs."""
    x0, u = rng.uniform(-3, 3, size=2), rng.uniform(-0.5, 0.5, size=(30, 1))
    full = simulate(true_params, x0, u)
    prefix = simulate(true_params, x0, u[:12])
    np.testing.assert_array_equal(full.y[:12], prefix.y)


def test_simulate_corner_start_grows(true_params):
    """From the corner (6, 6) the state norm keeps growing."""
    traj = simulate(true_params, [6.0, 6.0], np.zeros((50, 1)), record_states=True)
    norms = np.linalg.norm(traj.x, axis=1)
    assert np.all(np.diff(norms[10:]) > 0)
    assert norms[-1] > 2 * norms[0]


def test_simulate_divergence_guard():
    """An unstable model stops at the guard and keeps its finite prefix."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1).replace(A=[[10.0]], C=[[1.0]])
    with pytest.warns(DivergenceWarning):
        traj = simulate(params, [1.0], np.zeros((40, 1)))
    assert traj.diverged
    assert traj.diverged_at == len(traj)
    assert len(traj) < 40
    assert np.all(np.isfinite(traj.y))
    assert np.all(np.abs(traj.y) <= DIVERGENCE_BOUND)


def test_simulate_batch_matches_simulate(true_params, rng):
    """The batched rollout agrees with single rollouts."""
    x0 = rng.uniform(-6, 6, size=(5, 2))
    u = rng.uniform(-0.3, 0.3, size=(5, 25, 1))
    rollout = simulate_batch(true_params, x0, u)
    assert rollout.alive.all()
    np.testing.assert_array_equal(rollout.diverged_at, -np.ones(5))
    for i in range(5):
        np.testing.assert_allclose(rollout.y[i], simulate(true_params, x0[i], u[i]).y, rtol=1e-12, atol=1e-12)


def test_trajectory_length_mismatch():
    """u and y must have the same number of steps."""
    with pytest.raises(DimensionalityError):
        Trajectory(x0=[0.0], u=np.zeros((3, 1)), y=np.zeros((4, 1)))


def test_model_json_roundtrip(true_params, tmp_path):
    """model.json stores every matrix at full precision."""
    params = true_params.replace(A=true_params.A + 1e-17 + np.pi * 1e-9)
    path = tmp_path / "model.json"
    params.save_json(path)
    assert ModelParams.load_json(path) == params


def test_model_json_schema_version(true_params, tmp_path):
    """An unknown schema version is refused."""
    doc = true_params.as_dict()
    doc["schema_version"] = 99
    with pytest.raises(SchemaVersionError):
        ModelParams.from_dict(doc)


@pytest.mark.parametrize("dropped", ["D21", "dims"])
def test_model_json_missing_entry(true_params, dropped):
    """A document without a matrix or without dims names the file."""
    doc = true_params.as_dict()
    del doc[dropped]
    with pytest.raises(DatasetFormatError) as excinfo:
        ModelParams.from_dict(doc, path="model.json")
    assert excinfo.value.path == "model.json"


def test_model_json_wrong_shape(true_params):
    """A matrix that disagrees with dims is a format error."""
    doc = true_params.as_dict()
    doc["A"] = [[1.0]]
    with pytest.raises(DatasetFormatError):
        ModelParams.from_dict(doc)


def test_n_parameters(true_params):
    """Total number of model matrix entries for n = m = 2, r = e = 1."""
    assert true_params.n_parameters() == 21
