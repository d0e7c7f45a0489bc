"""Adam optimizer."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

log = logging.getLogger(__name__)


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


class Adam:
    """Adam with bias correction.

    A parameter whose gradient holds a non-finite value is left untouched for
    that step (its moments too); the incident is logged. A parameter's
    ``grad_mask`` zeroes selected entries, which is how frozen embedding rows
    stay fixed.
    """

    def __init__(self, params: list[Tensor], lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
            raise ValueError(f"betas must lie in (0, 1), got {beta1}, {beta2}")
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.state = AdamState(beta1, beta2, eps, 0,
                               [np.zeros_like(p.data) for p in self.params],
                               [np.zeros_like(p.data) for p in self.params])
        self.skipped = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        st = self.state
        st.step += 1
        b1, b2 = st.beta1, st.beta2
        c1 = 1.0 - b1 ** st.step
        c2 = 1.0 - b2 ** st.step
        for k, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                self.skipped += 1
                log.warning("adam: non-finite gradient for %s at step %d, update skipped",
                            p.name or f"param[{k}]", st.step)
                continue
            if p.grad_mask is not None:
                g = g * p.grad_mask
            st.m[k] = b1 * st.m[k] + (1.0 - b1) * g
            st.v[k] = b2 * st.v[k] + (1.0 - b2) * g * g
            m_hat = st.m[k] / c1
            v_hat = st.v[k] / c2
            p.data = (p.data - self.lr * m_hat / (np.sqrt(v_hat) + st.eps)).astype(p.dtype)

