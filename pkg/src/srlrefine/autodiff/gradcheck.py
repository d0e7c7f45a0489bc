"""Central-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, grad


def numerical_gradient(fn: Callable[[], Tensor], t: Tensor, epsilon: float) -> np.ndarray:
    out = np.zeros_like(t.data)
    flat = t.data.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + epsilon
        f_plus = float(fn().data)
        flat[k] = orig - epsilon
        f_minus = float(fn().data)
        flat[k] = orig
        out.reshape(-1)[k] = (f_plus - f_minus) / (2.0 * epsilon)
    return out


def gradient_check(fn: Callable[[], Tensor], tensors: Sequence[Tensor],
                   epsilon: float = 1e-3, dtype=np.float64) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``fn`` recomputes a scalar from ``tensors`` (read through closure). The
    tensors are cast to ``dtype`` for the duration of the check so the
    finite differences are not swamped by float32 rounding; their original
    data is restored afterwards.
    """
    originals = [t.data for t in tensors]
    flags = [t.requires_grad for t in tensors]
    try:
        for t in tensors:
            t.data = np.array(t.data, dtype=dtype, copy=True)
            t.requires_grad = True
        analytic = grad(fn(), tensors)
        worst = 0.0
        for t, a in zip(tensors, analytic):
            num = numerical_gradient(fn, t, epsilon)
            denom = np.maximum(1e-8, np.abs(a) + np.abs(num))
            if a.size:
                worst = max(worst, float(np.max(np.abs(a - num) / denom)))
        return worst
    finally:
        for t, data, flag in zip(tensors, originals, flags):
            t.data = data
            t.requires_grad = flag
            t.grad = None
