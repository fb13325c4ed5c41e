"""Optimizers over a ParamStore: Adam and a plain gradient step."""

from __future__ import annotations

import numpy as np

from .hgnn import ParamStore


class Adam:
    """Bias-corrected first/second-moment update; moments start at zero."""

    def __init__(
        self,
        params: ParamStore,
        lr: float = 5e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(t.data) for name, t in params.tensors.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in params.tensors.items()}

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, tensor in self.params.tensors.items():
            g = tensor.grad
            if g is None:
                g = 0.0
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            tensor.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grad(self):
        self.params.zero_grad()


class Sgd:
    """Plain gradient step: theta <- theta - lr * grad.

    Used for the value-fusion phase, where the fused Q head lives on the
    probability simplex: sign-normalized steps would walk the fusion weight
    to saturation on the small, sign-consistent regression residual that
    the simplex constraint leaves behind, while plain steps scale with the
    residual itself and keep the blend stable.
    """

    def __init__(self, params: ParamStore, lr: float = 5e-4):
        self.params = params
        self.lr = lr

    def step(self):
        for tensor in self.params.tensors.values():
            if tensor.grad is not None:
                tensor.data -= self.lr * tensor.grad

    def zero_grad(self):
        self.params.zero_grad()
