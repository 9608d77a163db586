"""Stability certificates: LMI assembly, Cholesky verification, ISS bounds and invariance checks."""

from .certificate import (
    EPS_PSD,
    Certificate,
    CertificateReport,
    InvarianceResult,
    build_F,
    build_G,
    check_certificate,
    containment_matrix,
    h_from_certificate,
    iss_bound,
    monte_carlo_invariance,
    stability_matrix,
)

__all__ = [
    "EPS_PSD",
    "Certificate",
    "CertificateReport",
    "InvarianceResult",
    "build_F",
    "build_G",
    "check_certificate",
    "containment_matrix",
    "h_from_certificate",
    "iss_bound",
    "monte_carlo_invariance",
    "stability_matrix",
]
