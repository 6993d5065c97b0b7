"""Parameter initializers."""
from __future__ import annotations

import numpy as np

from grassnet.tensor import Tensor


def glorot(rng: np.random.Generator, shape: tuple, name: str | None = None) -> Tensor:
    fan_in, fan_out = shape[-2], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True, name=name)


def zeros(shape: tuple, name: str | None = None) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


def ones(shape: tuple, name: str | None = None) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True, name=name)


def small_normal(rng: np.random.Generator, shape: tuple, scale: float = 0.01,
                 name: str | None = None) -> Tensor:
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True, name=name)
