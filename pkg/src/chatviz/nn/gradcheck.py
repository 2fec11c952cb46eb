"""Finite-difference verification of analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .tensor import Tensor


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    per_param: dict[str, float]

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error < tolerance


def grad_check(fn: Callable[[], Tensor], params: dict[str, Tensor],
               h: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients of the scalar ``fn()`` against central
    differences over every element of every parameter."""
    for tensor in params.values():
        tensor.zero_grad()
    loss = fn()
    loss.backward()
    analytic = {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in params.items()
    }

    per_param: dict[str, float] = {}
    for name, tensor in params.items():
        flat = tensor.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            up = fn().item()
            flat[i] = original - h
            down = fn().item()
            flat[i] = original
            numeric[i] = (up - down) / (2.0 * h)
        a = analytic[name].reshape(-1)
        # smoothed per-element relative error: the 1e-5 floor absorbs
        # finite-difference roundoff where the true gradient is near zero
        denom = np.abs(a) + np.abs(numeric) + 1e-5
        per_param[name] = float(np.max(np.abs(a - numeric) / denom)) if flat.size else 0.0

    worst = max(per_param, key=per_param.get) if per_param else ""
    return GradCheckReport(
        max_rel_error=max(per_param.values()) if per_param else 0.0,
        worst_param=worst,
        per_param=per_param,
    )
