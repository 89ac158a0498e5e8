"""Adam optimizer over named parameter tensors.

Standard update with bias correction:
    m <- b1*m + (1-b1)*g        m_hat = m / (1 - b1^t)
    v <- b2*v + (1-b2)*g^2      v_hat = v / (1 - b2^t)
    p <- p - lr * m_hat / (sqrt(v_hat) + eps)
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, ContractError, NumericError


class Adam:
    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        if not isinstance(params, dict):
            params = {f"param{i}": p for i, p in enumerate(params)}
        if lr <= 0:
            raise ConfigError(f"lr must be positive, got {lr}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ConfigError("betas must lie in [0, 1)")
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self):
        """Apply one bias-corrected update in place, consuming .grad."""
        self.step_count += 1
        c1 = 1.0 - self.beta1**self.step_count
        c2 = 1.0 - self.beta2**self.step_count
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                raise ContractError(f"parameter {name!r} has no gradient; run backward first")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"NaN/Inf gradient for parameter {name!r}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
