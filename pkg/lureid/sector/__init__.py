"""Sector conditions, polytopes L(H) and ellipsoids E(X)."""

from .sector import (
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

__all__ = [
    "Ellipsoid",
    "Polytope",
    "SectorData",
    "boundary_frame",
    "ellipsoid_boundary_2d",
    "gamma",
    "in_ellipsoid",
    "in_polytope",
    "polytope_segments_2d",
    "sample_ellipsoid",
]
