"""Adam and plain SGD over the small parameter arrays of one module, plus
global gradient-norm clipping."""

from __future__ import annotations

import numpy as np

from .params import ModuleParams, ParamGrads


def clip_grad_norm(grads: ParamGrads, max_norm: float):
    """Rescale all gradients so their global L2 norm is at most max_norm.

    Returns the pre-clip norm. A gradient of norm 5 clipped to 1 comes out
    with norm exactly 1.
    """
    arrays = grads.arrays()
    total = float(np.sqrt(sum(float(np.sum(a * a)) for a in arrays)))
    if total > max_norm and total > 0.0:
        scale = max_norm / total
        for a in arrays:
            a *= scale
    return total


class SGD:
    def __init__(self, params: ModuleParams, lr: float):
        self.lr = lr

    def step(self, params: ModuleParams, grads: ParamGrads) -> None:
        for p, g in zip(params.learnable_arrays(), grads.arrays()):
            p -= self.lr * g


class Adam:
    """Standard Adam (b1=0.9, b2=0.999, eps=1e-8) with bias correction."""

    def __init__(self, params: ModuleParams, lr: float,
                 b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.b1 = b1
        self.b2 = b2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(a) for a in params.learnable_arrays()]
        self.v = [np.zeros_like(a) for a in params.learnable_arrays()]

    def step(self, params: ModuleParams, grads: ParamGrads) -> None:
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params.learnable_arrays(), grads.arrays(),
                              self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def make_optimizer(name: str, params: ModuleParams, lr: float):
    if name == "adam":
        return Adam(params, lr)
    if name == "sgd":
        return SGD(params, lr)
    raise ValueError(f"unknown optimizer {name!r}")
