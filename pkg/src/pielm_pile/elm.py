"""Single-hidden-layer random-feature basis on the normalized depth [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .physics import DomainError

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


def _tanh(a):
    return np.tanh(a)


def _tanh_prime(a):
    t = np.tanh(a)
    return 1.0 - t * t


ACTIVATIONS = {"tanh": (_tanh, _tanh_prime)}


@dataclass(frozen=True)
class ElmConfig:
    Mc: int = 500
    activation: str = "tanh"
    weight_range: float = 12.0
    bias_range: float = 12.0
    seed: int = 0

    def __post_init__(self):
        if int(self.Mc) != self.Mc or self.Mc < 1:
            raise ValueError(f"Mc must be a positive integer, got {self.Mc}")
        if not self.weight_range > 0:
            raise ValueError(f"weight_range must be positive, got {self.weight_range}")
        if not self.bias_range >= 0:
            raise ValueError(f"bias_range must be non-negative, got {self.bias_range}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; available: {sorted(ACTIVATIONS)}")


@dataclass(frozen=True, eq=False)
class ElmBasis:
    """Frozen input weights ``W`` and biases ``b`` of the hidden layer.

    The arrays are made read-only on construction, so a basis can be shared
    between threads and solves.
    """

    W: np.ndarray
    b: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        W = np.array(self.W, dtype=float).ravel()
        b = np.array(self.b, dtype=float).ravel()
        if W.shape != b.shape or W.size == 0:
            raise ValueError(f"W and b must be non-empty and of equal length ({W.size} vs {b.size})")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("basis weights and biases must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        W.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def Mc(self) -> int:
        return self.W.size

    def to_dict(self) -> dict:
        return {"activation": self.activation, "W": self.W.tolist(), "b": self.b.tolist()}


def init_basis(config: ElmConfig) -> ElmBasis:
    """Draw ``W ~ U(-weight_range, weight_range)`` then ``b ~ U(-bias_range,
    bias_range)`` from a PCG64 stream seeded with ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    W = rng.uniform(-config.weight_range, config.weight_range, config.Mc)
    b = rng.uniform(-config.bias_range, config.bias_range, config.Mc)
    return ElmBasis(W, b, config.activation)


def _preactivation(basis: ElmBasis, zt) -> np.ndarray:
    zt = np.atleast_1d(np.asarray(zt, dtype=float))
    if zt.ndim != 1:
        raise ValueError("normalized coordinates must be a 1-D array")
    if np.any(~np.isfinite(zt)) or np.any(zt < 0.0) or np.any(zt > 1.0):
        raise DomainError("normalized coordinates must lie in [0, 1]")
    return np.outer(zt, basis.W) + basis.b


def features(basis: ElmBasis, zt) -> np.ndarray:
    """Hidden-layer outputs, shape ``(n, Mc)``."""
    sigma, _ = ACTIVATIONS[basis.activation]
    return sigma(_preactivation(basis, zt))


def feature_derivatives(basis: ElmBasis, zt) -> np.ndarray:
    """Exact d/dz~ of :func:`features`, ``W_k * sigma'(W_k z~ + b_k)``."""
    _, dsigma = ACTIVATIONS[basis.activation]
    return dsigma(_preactivation(basis, zt)) * basis.W
