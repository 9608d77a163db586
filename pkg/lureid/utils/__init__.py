from .arrayfuncs import (
    as_matrix,
    as_sequence,
    check_finite,
    cholesky_ok,
    sym,
    upper_blocks_to_symmetric,
)
from .exceptions import (
    CertificateWarning,
    ConfigurationError,
    DatasetFormatError,
    DatasetValidationError,
    DimensionalityError,
    DivergenceWarning,
    InfeasibleError,
    NonFiniteError,
    NumericalFailureError,
    SchemaVersionError,
    TrainingAbortedError,
)
from .io import content_hash, read_json, write_json
from .rng import philox_rng

__all__ = [
    "as_matrix",
    "as_sequence",
    "check_finite",
    "cholesky_ok",
    "sym",
    "upper_blocks_to_symmetric",
    "CertificateWarning",
    "ConfigurationError",
    "DatasetFormatError",
    "DatasetValidationError",
    "DimensionalityError",
    "DivergenceWarning",
    "InfeasibleError",
    "NonFiniteError",
    "NumericalFailureError",
    "SchemaVersionError",
    "TrainingAbortedError",
    "content_hash",
    "read_json",
    "write_json",
    "philox_rng",
]
