"""Adam optimizer over named parameter groups."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def clip_gradients(params: dict[str, Tensor], max_norm: float) -> float:
    """Scale the group's gradients so their global L2 norm is at most
    ``max_norm``; returns the pre-clip norm."""
    total = 0.0
    for t in params.values():
        if t.grad is not None:
            total += float((t.grad ** 2).sum())
    norm = total ** 0.5
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for t in params.values():
            if t.grad is not None:
                t.grad *= scale
    return norm


class Adam:
    def __init__(self, params: dict[str, Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in params.items()}
        self.t = 0

    def step(self) -> None:
        """Apply one update from accumulated gradients; missing or zero
        gradients leave the parameter unchanged."""
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, param in self.params.items():
            grad = param.grad
            if grad is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            param.data -= self.lr * update

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()
