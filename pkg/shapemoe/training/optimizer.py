"""
Adam without weight decay.

Parameters whose gradient is None in a step (never reached by the graph)
are skipped entirely: their values, moments and step counts do not change.
"""

from __future__ import annotations

import numpy as np

from shapemoe.model import ParameterStore
from shapemoe.training.models import OptimizerState


class Adam:
    def __init__(
        self,
        params: ParameterStore,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        state: OptimizerState | None = None,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = state or OptimizerState()
        for name, tensor in params.items():
            self.state.m.setdefault(name, np.zeros(tensor.shape, dtype=tensor.dtype))
            self.state.v.setdefault(name, np.zeros(tensor.shape, dtype=tensor.dtype))
            self.state.steps.setdefault(name, 0)

    def zero_grad(self) -> None:
        self.params.zero_grad()

    def step(self) -> list[str]:
        """Apply one update; returns the names of the parameters that moved."""
        updated = []
        for name, tensor in self.params.items():
            grad = tensor.grad
            if grad is None:
                continue
            t = self.state.steps[name] + 1
            m = self.beta1 * self.state.m[name] + (1.0 - self.beta1) * grad
            v = self.beta2 * self.state.v[name] + (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            update = self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            tensor.data = (tensor.data - update).astype(tensor.dtype, copy=False)
            self.state.m[name] = m.astype(tensor.dtype, copy=False)
            self.state.v[name] = v.astype(tensor.dtype, copy=False)
            self.state.steps[name] = t
            updated.append(name)
        return updated
