"""Adaptive-moment optimizer over a ParamStore.

Only learning rates are fixed by the training recipe; the family and its
decay rates (0.9/0.999, eps 1e-8, no weight decay) are project defaults.
Frozen parameters are never read or written, so their bytes stay put across
any number of steps.
"""

from __future__ import annotations

import numpy as np


class Adam:
    def __init__(self, store, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.store = store
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {}
        self._v = {}
        # grads handed in for frozen params are ignored, but counted
        self.frozen_grad_warnings = 0

    def step(self, grads=None):
        """Update trainable params from ``tensor.grad`` (or an explicit
        ``{name: ndarray}`` map). Missing grads are treated as zero-gradient
        and skipped."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        if grads is not None:
            for name in grads:
                if name in self.store and self.store.is_frozen(name):
                    self.frozen_grad_warnings += 1
        for name, tensor in self.store.trainable_items():
            g = grads.get(name) if grads is not None else tensor.grad
            if g is None:
                continue
            m = self._m.get(name)
            if m is None:
                m = np.zeros_like(tensor.data)
                self._m[name] = m
                self._v[name] = np.zeros_like(tensor.data)
            v = self._v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            mhat = m / bc1
            vhat = v / bc2
            tensor.data = tensor.data - self.lr * mhat / (np.sqrt(vhat)
                                                          + self.eps)
