import numpy as np
import pytest
import scipy.linalg

from lureid.certificate import (
    Certificate,
    build_F,
    build_G,
    check_certificate,
    h_from_certificate,
    iss_bound,
    monte_carlo_invariance,
)
from lureid.certificate.certificate import _membership_fraction
from lureid.model import ModelParams
from lureid.sdp import initialize
from lureid.sector import ellipsoid_boundary_2d
from lureid.utils.arrayfuncs import cholesky_ok
from lureid.utils.exceptions import ConfigurationError, DimensionalityError, SchemaVersionError

from tests.conftest import ALPHA_TRUE


@pytest.fixture()
def scalar_cert():
    """n = m = 1 certificate for the zero model."""
    return Certificate(P=[[1.0]], L=[[0.0]], M=[1.0], s=1.0, alpha=0.5)


def test_build_F_zero_model(scalar_cert):
    """F of the zero model is block diagonal."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1)
    F = build_F(params, scalar_cert)
    np.testing.assert_array_equal(F, np.diag([-0.25, -1.0, -2.0, -1.0]))


def test_build_F_places_A(scalar_cert):
    """A enters the (1, 4) block as P A'."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1).replace(A=[[1.0]])
    F = build_F(params, scalar_cert)
    assert F[0, 3] == 1.0
    assert F[3, 0] == 1.0


def test_build_F_is_exactly_symmetric(true_params, true_certificate):
    """The assembled matrix has size 2n + r + m and equals its transpose bitwise."""
    F = build_F(true_params, true_certificate)
    assert F.shape == (7, 7)
    np.testing.assert_array_equal(F, F.T)


def test_build_F_dimension_mismatch(true_params, scalar_cert):
    """A certificate of the wrong size is refused."""
    with pytest.raises(DimensionalityError):
        build_F(true_params, scalar_cert)


def test_build_G_examples():
    """Containment matrices for a scalar state."""
    cert = Certificate(P=[[1.0]], L=[[0.0]], M=[1.0], s=2.0, alpha=0.5)
    np.testing.assert_array_equal(build_G(cert, 1), [[0.25, 0.0], [0.0, 1.0]])
    assert cholesky_ok(build_G(cert.replace(L=np.array([[0.5]]), s=1.0), 1))
    assert not cholesky_ok(build_G(cert.replace(L=np.array([[2.0]]), s=1.0), 1))
    with pytest.raises(IndexError):
        build_G(cert, 0)
    with pytest.raises(IndexError):
        build_G(cert, 2)


def test_h_from_certificate():
    """H = L P^-1."""
    cert = Certificate(P=np.diag([2.0, 2.0]), L=[[1.0, 0.0]], M=[1.0], s=1.0, alpha=0.5)
    np.testing.assert_allclose(h_from_certificate(cert), [[0.5, 0.0]])
    assert cert.polytope().H.shape == (1, 2)


def test_certificate_validation():
    """Asymmetric P, non-diagonal M and a non-positive s are refused."""
    with pytest.raises(ConfigurationError):
        Certificate(P=[[1.0, 1.0], [0.0, 1.0]], L=np.zeros((1, 2)), M=[1.0], s=1.0, alpha=0.5)
    with pytest.raises(ConfigurationError):
        Certificate(P=np.eye(2), L=np.zeros((2, 2)), M=[[1.0, 1.0], [1.0, 1.0]], s=1.0, alpha=0.5)
    with pytest.raises(ConfigurationError):
        Certificate(P=np.eye(2), L=np.zeros((1, 2)), M=[1.0], s=0.0, alpha=0.5)
    with pytest.raises(DimensionalityError):
        Certificate(P=np.eye(2), L=np.zeros((1, 3)), M=[1.0], s=1.0, alpha=0.5)


def test_check_certificate_zero_model(scalar_cert):
    """The zero model is certified while delta stays within sqrt(1 - alpha^2) s."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1)
    report = check_certificate(params, scalar_cert, delta=0.5)
    assert report.passed
    assert report.delta_max == pytest.approx(np.sqrt(0.75))
    too_large = check_certificate(params, scalar_cert, delta=0.9)
    assert not too_large.passed
    assert too_large.failed_conditions() == ["delta"]


def test_check_certificate_alpha_range(scalar_cert):
    """alpha outside (0, 1) fails."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1)
    report = check_certificate(params, scalar_cert.replace(alpha=1.0), delta=0.0)
    assert "alpha" in report.failed_conditions()


def test_check_certificate_unstable_model(scalar_cert):
    """A = 2 violates the stability LMI."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1).replace(A=[[2.0]])
    report = check_certificate(params, scalar_cert, delta=0.1)
    assert not report.f_negative_definite
    assert report.failed_conditions() == ["F"]
    assert report.f_max_eigenvalue > 0


def test_check_certificate_region_data(true_params, true_certificate, small_dataset):
    """A passing report carries the region, H and the eigenvalue range of P^-1."""
    report = check_certificate(true_params, true_certificate, small_dataset.delta)
    assert report.passed
    assert report.lambda_min <= report.lambda_max
    np.testing.assert_allclose(report.H, h_from_certificate(true_certificate))
    doc = report.as_dict()
    assert doc["passed"] is True
    assert doc["delta"] == small_dataset.delta


def test_iss_bound_example():
    """Decay term plus input gain, below the saturation level."""
    cert = Certificate(P=np.diag([4.0, 1.0]), L=np.zeros((1, 2)), M=[1.0], s=1.0, alpha=0.5)
    expected = 0.5 + 0.1 / np.sqrt(0.75 * 0.25)
    assert iss_bound(cert, 1.0, 0.1, 2) == pytest.approx(expected, abs=1e-12)


def test_iss_bound_saturates_and_broadcasts():
    """Large arguments hit s / sqrt(lambda_min); arrays broadcast."""
    cert = Certificate(P=np.diag([4.0, 1.0]), L=np.zeros((1, 2)), M=[1.0], s=1.0, alpha=0.5)
    assert iss_bound(cert, 100.0, 0.0, 0) == pytest.approx(2.0)
    bounds = iss_bound(cert, np.ones((3, 1)), 0.0, np.arange(4)[None, :])
    assert bounds.shape == (3, 4)
    assert np.all(np.diff(bounds, axis=1) <= 0)
    with pytest.raises(ConfigurationError):
        iss_bound(cert, -1.0, 0.0, 0)


def test_schur_equivalence(rng):
    """Cholesky verdict on G_i agrees with l P^-1 l' <= 1 / s^2."""
    disagreements = 0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        R = rng.normal(size=(n, n))
        P = R @ R.T + 0.1 * np.eye(n)
        l = rng.normal(size=n)
        s = rng.uniform(0.1, 3.0)
        gap = 1.0 / s**2 - l @ scipy.linalg.solve(P, l, assume_a="pos")
        if abs(gap) < 1e-9:
            continue
        cert = Certificate(P=P, L=l[None, :], M=[1.0], s=s, alpha=0.5)
        if cholesky_ok(build_G(cert, 1) + 1e-12 * np.eye(n + 1)) != (gap > 0):
            disagreements += 1
    assert disagreements == 0


def test_region_is_inside_polytope(true_certificate):
    """Every boundary point of the certified region lies in L(H)."""
    points = ellipsoid_boundary_2d(true_certificate.region(), count=720)
    H = h_from_certificate(true_certificate)
    assert np.max(np.abs(points @ H.T)) <= 1.0 + 1e-9


def test_global_regime_survives_scaling(init_dims):
    """With L = 0 the certificate stays valid as s doubles."""
    params, cert = initialize(init_dims, delta=1.0, seed=0, fix_L_zero=True)
    assert not cert.L.any()
    for _ in range(10):
        cert = cert.replace(s=2.0 * cert.s)
        assert check_certificate(params, cert, delta=1.0).passed


def test_monte_carlo_invariance(true_params, true_certificate, small_dataset):
    """Sampled trajectories stay in the region and under the ISS bound."""
    result = monte_carlo_invariance(
        true_params, true_certificate, small_dataset.delta, n_samples=1000, n_steps=200, seed=7
    )
    assert result.passed
    assert result.max_level <= 1.0 + 1e-9
    assert result.max_iss_ratio <= 1.0 + 1e-9


def test_monte_carlo_detects_exits():
    """An unstable model leaves any region."""
    params = ModelParams.zeros(n=1, r=1, e=1, m=1).replace(A=[[1.5]])
    cert = Certificate(P=[[1.0]], L=[[0.0]], M=[1.0], s=1.0, alpha=0.5)
    result = monte_carlo_invariance(params, cert, 0.0, n_samples=50, n_steps=20)
    assert not result.passed
    assert result.region_exits > 0


def test_membership_fraction(true_certificate):
    """The origin is in the region and far points are not."""
    assert _membership_fraction([[0.0, 0.0]], true_certificate) == 1.0
    assert _membership_fraction([[0.0, 0.0], [1e6, 1e6]], true_certificate) == 0.5


def test_certificate_json_roundtrip(true_certificate, tmp_path):
    """certificate.json restores every field."""
    path = tmp_path / "certificate.json"
    true_certificate.save_json(path)
    loaded = Certificate.load_json(path)
    np.testing.assert_array_equal(loaded.P, true_certificate.P)
    np.testing.assert_array_equal(loaded.L, true_certificate.L)
    np.testing.assert_array_equal(loaded.M, true_certificate.M)
    assert loaded.s == true_certificate.s
    assert loaded.alpha == ALPHA_TRUE


def test_certificate_schema_version(true_certificate):
    """Unknown versions are refused."""
    doc = true_certificate.as_dict()
    doc["schema_version"] = 2
    with pytest.raises(SchemaVersionError):
        Certificate.from_dict(doc)
