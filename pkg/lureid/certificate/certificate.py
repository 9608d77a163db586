"""
Regional stability certificates for the Lur'e model.

A certificate (P, L, M, s, alpha) proves that the ellipsoid E(P^-1 / s^2) is forward
invariant and input-to-state stable for inputs bounded by delta when

    F(params, cert) is negative definite,
    G_i(cert) = [[1/s^2, l_i], [l_i', P]] is positive semidefinite for every channel i,
    delta^2 <= (1 - alpha^2) s^2 and 0 < alpha < 1.

Verification uses Cholesky factorizations only.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from lureid.model.model import ModelParams, simulate_batch
from lureid.sector.sector import Ellipsoid, Polytope, in_ellipsoid, sample_ellipsoid
from lureid.utils.arrayfuncs import as_matrix, check_finite, cholesky_ok, sym, upper_blocks_to_symmetric
from lureid.utils.exceptions import ConfigurationError, DatasetFormatError, DimensionalityError
from lureid.utils.io import check_schema_version, read_json, write_json
from lureid.utils.rng import philox_rng
from lureid.utils.validation import check_positive, check_symmetric

logger = logging.getLogger(__name__)

CERTIFICATE_SCHEMA_VERSION = 1

# shift added to G_i before its Cholesky factorization
EPS_PSD = 1e-12


@dataclass
class Certificate:
    """Decision variables of the regional stability conditions.

    ```python
    import numpy as np
    from lureid.certificate import Certificate

    cert = Certificate(P=np.eye(2), L=np.zeros((1, 2)), M=[1.0], s=1.0, alpha=0.5)
    assert cert.M.shape == (1, 1)
    ```

    Args:
        P (np.ndarray): symmetric positive definite n x n matrix
        L (np.ndarray): m x n matrix with rows l_1..l_m
        M (np.ndarray): positive diagonal m x m matrix; a 1d array is read as its diagonal
        s (float): region scale, positive
        alpha (float): contraction rate, checked to lie in (0, 1) by check_certificate
    """

    P: np.ndarray
    L: np.ndarray
    M: np.ndarray
    s: float
    alpha: float

    def __post_init__(self) -> None:
        """Coerce and validate shapes, symmetry and finiteness."""
        self.P = as_matrix(self.P, name="P")
        check_finite(self.P, name="P")
        check_symmetric(self.P, name="P")
        n = self.P.shape[0]
        M = np.asarray(self.M, dtype=float)
        if M.ndim <= 1:
            M = np.diag(np.atleast_1d(M))
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionalityError(f"M must be square, got shape {M.shape}")
        if np.any(M != np.diag(np.diag(M))):
            raise ConfigurationError("M must be diagonal")
        check_finite(M, name="M")
        self.M = M
        self.L = as_matrix(self.L, shape=(M.shape[0], n), name="L")
        check_finite(self.L, name="L")
        self.s = float(self.s)
        self.alpha = float(self.alpha)
        check_positive(self.s, "s")
        if not np.isfinite(self.alpha):
            raise ConfigurationError("alpha must be finite")

    @property
    def n(self) -> int:
        """State dimension."""
        return self.P.shape[0]

    @property
    def m(self) -> int:
        """Number of nonlinearity channels."""
        return self.M.shape[0]

    @property
    def mu(self) -> np.ndarray:
        """Diagonal of M."""
        return np.diag(self.M).copy()

    def copy(self) -> "Certificate":
        """Deep copy."""
        return Certificate(P=self.P.copy(), L=self.L.copy(), M=self.M.copy(), s=self.s, alpha=self.alpha)

    def replace(self, **fields) -> "Certificate":
        """Copy with some fields replaced."""
        return dataclasses.replace(self.copy(), **fields)

    def region(self) -> Ellipsoid:
        """The certified ellipsoid E(P^-1 / s^2)."""
        P_inv = scipy.linalg.solve(self.P, np.eye(self.n), assume_a="pos")
        return Ellipsoid(sym(P_inv) / self.s**2)

    def polytope(self) -> Polytope:
        """The polytope L(H) with H = L P^-1."""
        return Polytope(h_from_certificate(self))

    def as_dict(self) -> dict:
        """JSON-ready representation."""
        return {
            "schema_version": CERTIFICATE_SCHEMA_VERSION,
            "P": self.P.tolist(),
            "L": self.L.tolist(),
            "M": self.mu.tolist(),
            "s": self.s,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, doc: dict, path=None) -> "Certificate":
        """Inverse of as_dict. Missing keys or unusable values raise DatasetFormatError."""
        check_schema_version(doc, CERTIFICATE_SCHEMA_VERSION, "certificate", path=path)
        missing = [k for k in ("P", "L", "M", "s", "alpha") if k not in doc]
        if missing:
            raise DatasetFormatError(f"certificate document is missing {missing}", path=path)
        try:
            return cls(P=doc["P"], L=doc["L"], M=doc["M"], s=doc["s"], alpha=doc["alpha"])
        except (TypeError, ValueError) as e:
            raise DatasetFormatError(f"malformed certificate document: {e}", path=path) from e

    def save_json(self, path) -> None:
        """Write certificate.json."""
        write_json(self.as_dict(), path)

    @classmethod
    def load_json(cls, path) -> "Certificate":
        """Read certificate.json."""
        return cls.from_dict(read_json(path), path=str(path))


@dataclass
class CertificateReport:
    """Outcome of check_certificate.

    Region data (region, H, lambda_min, lambda_max) is only available when P is positive definite.
    """

    f_negative_definite: bool
    g_psd: List[bool]
    delta_ok: bool
    alpha_ok: bool
    delta: float
    delta_max: float
    alpha: float
    s: float
    region: Optional[Ellipsoid] = None
    H: Optional[np.ndarray] = None
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    eps_psd: float = EPS_PSD
    f_max_eigenvalue: Optional[float] = None
    g_min_eigenvalues: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every condition holds."""
        return self.f_negative_definite and all(self.g_psd) and self.delta_ok and self.alpha_ok

    def __bool__(self):
        """Same as passed."""
        return self.passed

    def failed_conditions(self) -> List[str]:
        """Names of the conditions that do not hold."""
        failed = []
        if not self.f_negative_definite:
            failed.append("F")
        failed += [f"G_{i + 1}" for i, ok in enumerate(self.g_psd) if not ok]
        if not self.delta_ok:
            failed.append("delta")
        if not self.alpha_ok:
            failed.append("alpha")
        return failed

    def iss_constants(self):
        """(lambda_min, lambda_max, alpha, s), with lambda the extreme eigenvalues of P^-1."""
        return self.lambda_min, self.lambda_max, self.alpha, self.s

    def as_dict(self) -> dict:
        """JSON-ready representation, including the delta used."""
        return {
            "schema_version": CERTIFICATE_SCHEMA_VERSION,
            "passed": self.passed,
            "f_negative_definite": self.f_negative_definite,
            "g_psd": list(self.g_psd),
            "delta_ok": self.delta_ok,
            "alpha_ok": self.alpha_ok,
            "delta": self.delta,
            "delta_max": self.delta_max,
            "alpha": self.alpha,
            "s": self.s,
            "eps_psd": self.eps_psd,
            "region_X": None if self.region is None else self.region.X.tolist(),
            "H": None if self.H is None else self.H.tolist(),
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "f_max_eigenvalue": self.f_max_eigenvalue,
            "g_min_eigenvalues": list(self.g_min_eigenvalues),
        }


def _check_compatible(params: ModelParams, cert: Certificate) -> None:
    dims = params.dims
    if cert.n != dims.n or cert.m != dims.m:
        raise DimensionalityError(
            f"certificate has n={cert.n}, m={cert.m} but the model has n={dims.n}, m={dims.m}"
        )


def stability_matrix(params: ModelParams, P, L, M, alpha) -> np.ndarray:
    """build_F on raw arrays; P is used as given and should be symmetric."""
    n, r = params.dims.n, params.dims.r
    blocks = [
        [-(alpha**2) * P, np.zeros((n, r)), P @ params.C2.T + L.T, P @ params.A.T],
        [-np.eye(r), params.D21.T, params.B.T],
        [-2.0 * M, M @ params.B2.T],
        [-P],
    ]
    return upper_blocks_to_symmetric(blocks)


def containment_matrix(s_hat, l_i, P) -> np.ndarray:
    """[[s_hat, l_i], [l_i', P]] for a row l_i of L and s_hat = 1/s^2."""
    return upper_blocks_to_symmetric([[np.array([[s_hat]]), np.reshape(l_i, (1, -1))], [P]])


def build_F(params: ModelParams, cert: Certificate) -> np.ndarray:
    """The stability LMI matrix of size 2n + r + m, exactly symmetric.

    Block rows, upper triangle (blocks sized n, r, m, n):

        [-alpha^2 P, 0,     P C2' + L', P A']
        [            -I_r,  D21',       B'  ]
        [                   -2M,        M B2']
        [                               -P  ]

    Example:

    ```python
    import numpy as np
    from lureid.certificate import Certificate, build_F
    from lureid.model import ModelParams

    params = ModelParams.zeros(n=1, r=1, e=1, m=1)
    cert = Certificate(P=[[1.0]], L=[[0.0]], M=[1.0], s=1.0, alpha=0.5)
    np.testing.assert_array_equal(build_F(params, cert), np.diag([-0.25, -1.0, -2.0, -1.0]))
    ```
    """
    _check_compatible(params, cert)
    return stability_matrix(params, cert.P, cert.L, cert.M, cert.alpha)


def build_G(cert: Certificate, i: int) -> np.ndarray:
    """Channel-i containment matrix [[1/s^2, l_i], [l_i', P]], with i = 1..m."""
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= cert.m:
        raise IndexError(f"channel index must be in 1..{cert.m}, got {i}")
    return containment_matrix(1.0 / cert.s**2, cert.L[i - 1], cert.P)


def h_from_certificate(cert: Certificate) -> np.ndarray:
    """H = L P^-1, computed with a linear solve."""
    try:
        return scipy.linalg.solve(cert.P, cert.L.T, assume_a="sym").T
    except np.linalg.LinAlgError as e:
        raise ConfigurationError("P is singular") from e


def _p_eigenvalues(P):
    eigenvalues = scipy.linalg.eigvalsh(P)
    if eigenvalues.min() <= 0:
        raise ConfigurationError("P must be positive definite")
    return eigenvalues


def check_certificate(params: ModelParams, cert: Certificate, delta: float) -> CertificateReport:
    """Verify a certificate for a model and an input bound.

    ```python
    import numpy as np
    from lureid.certificate import Certificate, check_certificate
    from lureid.model import ModelParams

    params = ModelParams.zeros(n=1, r=1, e=1, m=1)
    cert = Certificate(P=[[1.0]], L=[[0.0]], M=[1.0], s=1.0, alpha=0.5)
    report = check_certificate(params, cert, delta=0.5)
    assert report.passed
    ```

    Args:
        params (ModelParams): the model
        cert (Certificate): the candidate certificate
        delta (float): bound on the input magnitude

    Returns:
        CertificateReport
    """
    check_positive(delta, "delta", allow_zero=True)
    _check_compatible(params, cert)
    F = build_F(params, cert)
    check_finite(F, name="F")
    f_ok = cholesky_ok(-F)
    g_ok = []
    g_min = []
    for i in range(1, cert.m + 1):
        G = build_G(cert, i)
        g_ok.append(cholesky_ok(G + EPS_PSD * np.eye(G.shape[0])))
        g_min.append(float(scipy.linalg.eigvalsh(G).min()))
    alpha_ok = 0.0 < cert.alpha < 1.0
    delta_ok = delta**2 <= (1.0 - cert.alpha**2) * cert.s**2
    delta_max = float(np.sqrt(max(1.0 - cert.alpha**2, 0.0)) * cert.s)

    report = CertificateReport(
        f_negative_definite=f_ok,
        g_psd=g_ok,
        delta_ok=bool(delta_ok),
        alpha_ok=bool(alpha_ok),
        delta=float(delta),
        delta_max=delta_max,
        alpha=cert.alpha,
        s=cert.s,
        f_max_eigenvalue=float(scipy.linalg.eigvalsh(F).max()),
        g_min_eigenvalues=g_min,
    )
    if cholesky_ok(cert.P):
        p_eig = _p_eigenvalues(cert.P)
        report.region = cert.region()
        report.H = h_from_certificate(cert)
        report.lambda_min = float(1.0 / p_eig.max())
        report.lambda_max = float(1.0 / p_eig.min())
    logger.debug(f"certificate check: passed={report.passed}, failed={report.failed_conditions()}")
    return report


def iss_bound(cert: Certificate, x0_norm, u_sup, k):
    """Bound on |x_k| for x_0 in the certified region and inputs bounded by u_sup.

        min{ sqrt(lmax / lmin) alpha^k |x0| + sqrt(1 / ((1 - alpha^2) lmin)) u_sup, s / sqrt(lmin) }

    with lmin, lmax the extreme eigenvalues of P^-1. Arguments broadcast like numpy arrays.

    ```python
    import numpy as np
    from lureid.certificate import Certificate, iss_bound

    cert = Certificate(P=np.diag([4.0, 1.0]), L=np.zeros((1, 2)), M=[1.0], s=1.0, alpha=0.5)
    assert abs(iss_bound(cert, 1.0, 0.1, 2) - (0.5 + 0.1 / np.sqrt(0.75 * 0.25))) < 1e-12
    ```
    """
    x0_norm = np.asarray(x0_norm, dtype=float)
    u_sup = np.asarray(u_sup, dtype=float)
    if np.any(x0_norm < 0) or np.any(u_sup < 0):
        raise ConfigurationError("x0_norm and u_sup must be nonnegative")
    p_eig = _p_eigenvalues(cert.P)
    lambda_min = 1.0 / p_eig.max()
    lambda_max = 1.0 / p_eig.min()
    alpha = cert.alpha
    decay = np.sqrt(lambda_max / lambda_min) * alpha ** np.asarray(k, dtype=float) * x0_norm
    gain = np.sqrt(1.0 / ((1.0 - alpha**2) * lambda_min)) * u_sup
    bound = np.minimum(decay + gain, cert.s / np.sqrt(lambda_min))
    if bound.ndim == 0:
        return float(bound)
    return bound


@dataclass
class InvarianceResult:
    """Outcome of monte_carlo_invariance."""

    n_samples: int
    n_steps: int
    region_exits: int
    iss_violations: int
    max_level: float
    max_iss_ratio: float

    @property
    def passed(self) -> bool:
        """No sample left the region or exceeded the ISS bound."""
        return self.region_exits == 0 and self.iss_violations == 0


def monte_carlo_invariance(
    params: ModelParams,
    cert: Certificate,
    delta: float,
    n_samples: int = 1000,
    n_steps: int = 200,
    seed: int = 0,
    slack: float = 1e-9,
) -> InvarianceResult:
    """Check forward invariance and the ISS bound on sampled trajectories.

    Initial states are uniform in E(P^-1 / s^2). Inputs have norm at most delta; every
    other sample uses inputs on the sphere of radius delta, the rest are uniform in the ball.

    Args:
        params (ModelParams): the model
        cert (Certificate): the certificate
        delta (float): input bound
        n_samples (int): number of trajectories
        n_steps (int): steps per trajectory
        seed (int): seed of the Philox stream
        slack (float): tolerance on region membership and on the bound

    Returns:
        InvarianceResult
    """
    check_positive(delta, "delta", allow_zero=True)
    _check_compatible(params, cert)
    rng = philox_rng(seed)
    region = cert.region()
    r = params.dims.r
    x0 = sample_ellipsoid(region, 1.0, n_samples, rng)
    directions = rng.standard_normal((n_samples, n_steps, r))
    norms = np.linalg.norm(directions, axis=2, keepdims=True)
    norms[norms == 0] = 1.0
    radii = rng.uniform(0.0, 1.0, size=(n_samples, n_steps, 1)) ** (1.0 / r)
    radii[::2] = 1.0
    u = delta * directions / norms * radii

    rollout = simulate_batch(params, x0, u)
    levels = np.einsum("bki,ij,bkj->bk", rollout.x, region.X, rollout.x)
    dead = ~rollout.alive
    exits = (levels > 1.0 + slack) | dead
    region_exits = int(np.count_nonzero(exits.any(axis=1)))

    u_norm = np.linalg.norm(u, axis=2)
    u_sup = np.concatenate([np.zeros((n_samples, 1)), np.maximum.accumulate(u_norm, axis=1)[:, :-1]], axis=1)
    bound = iss_bound(cert, np.linalg.norm(x0, axis=1)[:, None], u_sup, np.arange(n_steps)[None, :])
    x_norm = np.linalg.norm(rollout.x, axis=2)
    over = (x_norm > bound + slack) | dead
    iss_violations = int(np.count_nonzero(over.any(axis=1)))

    result = InvarianceResult(
        n_samples=n_samples,
        n_steps=n_steps,
        region_exits=region_exits,
        iss_violations=iss_violations,
        max_level=float(levels[rollout.alive].max()) if rollout.alive.any() else float("inf"),
        max_iss_ratio=float(np.max(np.where(rollout.alive, x_norm / np.maximum(bound, 1e-300), 0.0))),
    )
    if not result.passed:
        logger.warning(
            f"invariance check: {region_exits} region exits and {iss_violations} bound violations "
            f"out of {n_samples} samples"
        )
    return result


def _membership_fraction(points, cert: Certificate) -> float:
    """Fraction of points that lie in the certified region."""
    region = cert.region()
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return float(np.mean([in_ellipsoid(x, region) for x in points]))
