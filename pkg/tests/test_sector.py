import numpy as np
import pytest

from lureid.sector import (
    Ellipsoid,
    Polytope,
    SectorData,
    boundary_frame,
    ellipsoid_boundary_2d,
    gamma,
    in_ellipsoid,
    in_polytope,
    polytope_segments_2d,
    sample_ellipsoid,
)
from lureid.utils.exceptions import ConfigurationError, DimensionalityError


def test_gamma_examples():
    """Hand-evaluated sector forms."""
    assert gamma([2.0], [1.0], SectorData(Lambda=[1.0], H=[[0.0]])) == 2.0
    assert gamma([2.0], [1.0], SectorData(Lambda=[1.0], H=[[0.5]])) == 3.0
    assert gamma([0.5], [7.0], SectorData(Lambda=[3.0], H=[[4.0]])) == 0.0


def test_gamma_nonnegative_on_polytope(rng):
    """For x in L(H) the sector form is nonnegative for every v."""
    for _ in range(10000):
        m, n = rng.integers(1, 4), rng.integers(1, 4)
        H = rng.normal(scale=2.0, size=(m, n))
        x = rng.normal(size=n)
        reach = np.max(np.abs(H @ x))
        if reach > 1:
            x = x / reach * rng.uniform(0.0, 1.0)
        sector = SectorData(Lambda=rng.uniform(0.1, 5.0, size=m), H=H)
        v = rng.normal(scale=3.0, size=m)
        assert gamma(v, x, sector) >= -1e-12


def test_gamma_can_be_negative_outside_polytope():
    """Outside L(H) the form may turn negative."""
    sector = SectorData(Lambda=[1.0], H=[[1.0]])
    assert gamma([0.5], [-10.0], sector) == 0.0
    assert gamma([1.5], [-10.0], sector) < 0


def test_sector_data_validation():
    """Lambda must be positive diagonal and match the rows of H."""
    with pytest.raises(ConfigurationError):
        SectorData(Lambda=[0.0], H=[[1.0]])
    with pytest.raises(ConfigurationError):
        SectorData(Lambda=[[1.0, 0.5], [0.5, 1.0]], H=np.zeros((2, 2)))
    with pytest.raises(DimensionalityError):
        SectorData(Lambda=[1.0, 1.0], H=np.zeros((3, 2)))
    with pytest.raises(DimensionalityError):
        gamma([1.0, 2.0], [1.0], SectorData(Lambda=[1.0], H=[[1.0]]))


def test_in_polytope():
    """Boundary points belong to L(H)."""
    box = Polytope(np.eye(2))
    assert in_polytope([1.0, -1.0], box)
    assert not in_polytope([1.0001, 0.0], box)
    assert in_polytope([1e6, 1e6], Polytope(np.zeros((0, 2))))


def test_in_ellipsoid():
    """x'Xx <= 1."""
    ellipsoid = Ellipsoid(np.diag([4.0, 1.0]))
    assert in_ellipsoid([0.5, 0.0], ellipsoid)
    assert not in_ellipsoid([0.6, 0.0], ellipsoid)
    assert in_ellipsoid([0.0, 1.0], ellipsoid)


def test_ellipsoid_validation():
    """Indefinite and asymmetric matrices are refused."""
    with pytest.raises(ConfigurationError):
        Ellipsoid(np.diag([1.0, -1.0]))
    with pytest.raises(ConfigurationError):
        Ellipsoid([[1.0, 0.5], [0.0, 1.0]])


def test_semi_axes():
    """Semi-axes of diag(4, 1) are 1/2 and 1."""
    np.testing.assert_allclose(Ellipsoid(np.diag([4.0, 1.0])).semi_axes(), [0.5, 1.0])
    with pytest.raises(ConfigurationError):
        Ellipsoid(np.diag([1.0, 0.0])).semi_axes()


def test_ellipsoid_boundary_lies_on_boundary():
    """Every boundary point of E(X / s^2) satisfies x'Xx = s^2."""
    X = np.array([[2.0, 0.3], [0.3, 0.5]])
    points = ellipsoid_boundary_2d(Ellipsoid(X), scale=3.0, count=64)
    np.testing.assert_allclose(np.einsum("ij,jk,ik->i", points, X, points), 9.0, rtol=1e-10)


def test_ellipsoid_boundary_scaled_axes():
    """diag(4, 1) at scale 2 starts at (1, 0) and passes (0, 2)."""
    points = ellipsoid_boundary_2d(Ellipsoid(np.diag([4.0, 1.0])), scale=2.0, count=4)
    np.testing.assert_allclose(points, [[1, 0], [0, 2], [-1, 0], [0, -2]], atol=1e-12)


def test_ellipsoid_boundary_dimension():
    """Only planar ellipsoids are exported."""
    with pytest.raises(DimensionalityError):
        ellipsoid_boundary_2d(Ellipsoid(np.eye(3)))


def test_boundary_frame_columns():
    """Table form of the boundary."""
    frame = boundary_frame(Ellipsoid(np.eye(2)), count=10)
    assert list(frame.columns) == ["phi", "x1", "x2"]
    assert len(frame) == 10


def test_sample_ellipsoid_inside(rng):
    """Samples land inside the scaled ellipsoid."""
    X = np.array([[2.0, 0.3], [0.3, 0.5]])
    points = sample_ellipsoid(Ellipsoid(X), scale=1.5, count=500, rng=rng)
    assert points.shape == (500, 2)
    assert np.all(np.einsum("ij,jk,ik->i", points, X, points) <= 1.5**2 * (1 + 1e-12))


def test_polytope_segments_box():
    """Unit box clipped to a larger box gives four full edges."""
    segments = polytope_segments_2d(Polytope(np.eye(2)), bounds=(-2, 2, -2, 2))
    assert len(segments) == 8
    first = segments[segments["edge_id"] == 0]
    np.testing.assert_allclose(first["x1"], [1.0, 1.0])
    np.testing.assert_allclose(sorted(first["x2"]), [-2.0, 2.0])


def test_polytope_segments_outside_box():
    """Edges that miss the box are dropped, as are zero rows of H."""
    segments = polytope_segments_2d(Polytope([[0.1, 0.0], [0.0, 0.0]]), bounds=(-2, 2, -2, 2))
    assert segments.empty
    with pytest.raises(ConfigurationError):
        polytope_segments_2d(Polytope(np.eye(2)), bounds=(1, -1, -1, 1))
