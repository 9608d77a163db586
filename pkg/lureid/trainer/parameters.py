"""
The optimization variable of training: model matrices plus certificate variables.

P is stored as a full matrix and enters every formula through its symmetric part,
M through its diagonal mu, and s through sigma = s^2.
"""

from collections import OrderedDict
from typing import Dict, Iterable

import numpy as np

from lureid.certificate.certificate import Certificate
from lureid.model.model import MATRIX_NAMES, Dimensions, ModelParams
from lureid.utils.arrayfuncs import sym
from lureid.utils.exceptions import ConfigurationError

CERTIFICATE_NAMES = ("P", "L", "mu", "alpha", "sigma")
OMEGA_NAMES = MATRIX_NAMES + CERTIFICATE_NAMES

MODES = ("gensec", "stdsec", "nosec")


class Omega:
    """Named blocks of the training variable, all numpy arrays (scalars have shape ()).

    Gradients use the same container.

    ```python
    import numpy as np
    from lureid.certificate import Certificate
    from lureid.model import ModelParams
    from lureid.trainer import Omega

    params = ModelParams.zeros(n=2, r=1, e=1, m=2)
    cert = Certificate(P=np.eye(2), L=np.zeros((2, 2)), M=[1.0, 1.0], s=2.0, alpha=0.9)
    omega = Omega.from_model(params, cert)
    assert omega["sigma"] == 4.0
    assert Omega.unflatten(omega.flatten(), omega) == omega
    ```
    """

    def __init__(self, blocks: Dict[str, np.ndarray]):
        """Blocks keyed by OMEGA_NAMES."""
        missing = [name for name in OMEGA_NAMES if name not in blocks]
        if missing:
            raise ConfigurationError(f"missing blocks {missing}")
        self.blocks = OrderedDict((name, np.array(blocks[name], dtype=float)) for name in OMEGA_NAMES)

    @classmethod
    def from_model(cls, params: ModelParams, cert: Certificate) -> "Omega":
        """Pack a model and its certificate."""
        blocks = {name: getattr(params, name) for name in MATRIX_NAMES}
        blocks.update(P=cert.P, L=cert.L, mu=cert.mu, alpha=cert.alpha, sigma=cert.s**2)
        return cls(blocks)

    def __getitem__(self, name: str) -> np.ndarray:
        """Block by name."""
        return self.blocks[name]

    def __setitem__(self, name: str, value) -> None:
        """Replace a block, keeping its shape."""
        value = np.array(value, dtype=float)
        if value.shape != self.blocks[name].shape:
            raise ConfigurationError(f"block {name} has shape {self.blocks[name].shape}, got {value.shape}")
        self.blocks[name] = value

    def __eq__(self, other):
        """Bitwise equality of all blocks."""
        if not isinstance(other, Omega):
            return NotImplemented
        return all(np.array_equal(self[k], other[k]) for k in OMEGA_NAMES)

    @property
    def dims(self) -> Dimensions:
        """Model dimensions."""
        return Dimensions(n=self["A"].shape[0], r=self["B"].shape[1], e=self["C"].shape[0], m=self["B2"].shape[1])

    @property
    def params(self) -> ModelParams:
        """The model part."""
        return ModelParams(**{name: self[name].copy() for name in MATRIX_NAMES})

    @property
    def P_sym(self) -> np.ndarray:
        """Symmetric part of P."""
        return sym(self["P"])

    @property
    def alpha(self) -> float:
        """Contraction rate."""
        return float(self["alpha"])

    @property
    def sigma(self) -> float:
        """Squared region scale."""
        return float(self["sigma"])

    def certificate(self) -> Certificate:
        """The certificate part; requires sigma > 0."""
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive to form a certificate, got {self.sigma}")
        return Certificate(P=self.P_sym, L=self["L"].copy(), M=self["mu"].copy(), s=np.sqrt(self.sigma), alpha=self.alpha)

    def copy(self) -> "Omega":
        """Deep copy."""
        return Omega({name: value.copy() for name, value in self.blocks.items()})

    def zeros_like(self) -> "Omega":
        """Same shapes, all zero."""
        return Omega({name: np.zeros_like(value) for name, value in self.blocks.items()})

    def flatten(self) -> np.ndarray:
        """All blocks concatenated in OMEGA_NAMES order."""
        return np.concatenate([self[name].ravel() for name in OMEGA_NAMES])

    @classmethod
    def unflatten(cls, vector: np.ndarray, template: "Omega") -> "Omega":
        """Inverse of flatten, with the shapes of template."""
        vector = np.asarray(vector, dtype=float)
        if vector.size != template.size:
            raise ConfigurationError(f"expected a vector of length {template.size}, got {vector.size}")
        blocks = {}
        offset = 0
        for name in OMEGA_NAMES:
            shape = template[name].shape
            size = int(np.prod(shape, dtype=int))
            blocks[name] = vector[offset : offset + size].reshape(shape)
            offset += size
        return cls(blocks)

    @property
    def size(self) -> int:
        """Number of stored scalars."""
        return int(sum(value.size for value in self.blocks.values()))

    def mask(self, names: Iterable[str]) -> np.ndarray:
        """Boolean vector over flatten() selecting the given blocks."""
        names = set(names)
        return np.concatenate([np.full(self[name].size, name in names) for name in OMEGA_NAMES])


def trainable_blocks(mode: str):
    """Blocks updated by the optimizer in a training mode."""
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "nosec":
        return MATRIX_NAMES
    if mode == "stdsec":
        return MATRIX_NAMES + ("P", "mu", "alpha", "sigma")
    return OMEGA_NAMES


def count_parameters(mode: str, dims: Dimensions) -> Dict[str, int]:
    """Model parameter count and trainable count, with P counted as a symmetric matrix.

    ```python
    from lureid.model import Dimensions
    from lureid.trainer import count_parameters

    dims = Dimensions(n=2, r=1, e=1, m=2)
    assert count_parameters("nosec", dims) == {"theta": 21, "trainable": 21}
    assert count_parameters("gensec", dims)["trainable"] == 32
    ```
    """
    theta = int(sum(np.prod(shape) for shape in dims.shapes().values()))
    sizes = {"P": dims.n * (dims.n + 1) // 2, "L": dims.m * dims.n, "mu": dims.m, "alpha": 1, "sigma": 1}
    extra = sum(sizes[name] for name in trainable_blocks(mode) if name in sizes)
    return {"theta": theta, "trainable": theta + extra}
