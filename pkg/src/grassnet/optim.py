"""RMSProp with additive L2 weight decay."""
from __future__ import annotations

import numpy as np


def rmsprop_step(param: np.ndarray, grad: np.ndarray, v: np.ndarray, lr: float,
                 rho: float = 0.9, eps: float = 1e-8,
                 weight_decay: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """One update; returns (new_param, new_square_average)."""
    g = grad + weight_decay * param
    v = rho * v + (1.0 - rho) * g * g
    return param - lr * g / (np.sqrt(v) + eps), v


class RMSProp:
    def __init__(self, params: dict, lr: float = 1e-3, rho: float = 0.9,
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = params
        self.lr, self.rho, self.eps, self.weight_decay = lr, rho, eps, weight_decay
        self.state = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self) -> None:
        for name, t in self.params.items():
            grad = np.zeros_like(t.data) if t.grad is None else t.grad
            t.data, self.state[name] = rmsprop_step(
                t.data, grad, self.state[name], self.lr, self.rho, self.eps, self.weight_decay
            )

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None
