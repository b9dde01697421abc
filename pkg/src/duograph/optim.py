"""AdamW with decoupled weight decay, plus a cosine annealing schedule."""
from __future__ import annotations

import math

import numpy as np

from .errors import StepOutOfRange
from .tensor import Tensor


class AdamW:
    """Adam with weight decay applied directly to the weights.

    Decay shrinks each parameter by lr*weight_decay*param before the
    moment-based update, so decay strength does not pass through the
    adaptive denominators.
    """

    def __init__(self, params: list[tuple[str, Tensor]], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = {name: np.zeros_like(t.data) for name, t in self.params}
        self._v = {name: np.zeros_like(t.data) for name, t in self.params}

    def zero_grad(self) -> None:
        for _, t in self.params:
            t.zero_grad()

    def step(self, lr: float) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params:
            if self.weight_decay:
                p.data -= lr * self.weight_decay * p.data
            g = p.grad
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def cosine_lr(step: int, total: int, lr_max: float, lr_min: float) -> float:
    """Cosine anneal from lr_max (step 0) to lr_min (step == total)."""
    if total <= 0:
        raise StepOutOfRange(f"total must be positive, got {total}")
    if not 0 <= step <= total:
        raise StepOutOfRange(f"step {step} outside [0, {total}]")
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * step / total))
