"""Named parameter registry with per-parameter freeze flags and groups.

Groups partition the model for the two-stage protocol: during adaptation the
pretrained groups (foundation, decoder, rgb-embed) freeze while x-embed,
prompter and experts stay trainable. Freezing clears ``requires_grad`` so the
tape treats frozen weights as constants and never materializes their grads.
"""

from __future__ import annotations

import numpy as np

from .autograd.tensor import Tensor
from .errors import ContractError

GROUPS = ("foundation", "decoder", "rgb-embed", "x-embed", "prompter",
          "experts")

# Freeze policy for the multi-modal adaptation stage.
ADAPT_FROZEN_GROUPS = ("foundation", "decoder", "rgb-embed")


class ParamStore:
    """Ordered map name -> (tensor, frozen flag, group)."""

    def __init__(self):
        self._tensors = {}
        self._frozen = {}
        self._groups = {}

    def register(self, name, data, group, frozen=False):
        if group not in GROUPS:
            raise ContractError(f"unknown parameter group '{group}'")
        if name in self._tensors:
            raise ContractError(f"duplicate parameter name '{name}'")
        t = Tensor(np.asarray(data, dtype=np.float64),
                   requires_grad=not frozen)
        self._tensors[name] = t
        self._frozen[name] = bool(frozen)
        self._groups[name] = group
        return t

    def __contains__(self, name):
        return name in self._tensors

    def __getitem__(self, name):
        return self._tensors[name]

    def __len__(self):
        return len(self._tensors)

    def names(self):
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def group_of(self, name):
        return self._groups[name]

    def is_frozen(self, name):
        return self._frozen[name]

    def set_frozen(self, name, frozen):
        self._frozen[name] = bool(frozen)
        self._tensors[name].requires_grad = not frozen
        if frozen:
            self._tensors[name].grad = None

    def freeze_groups(self, groups):
        for name, group in self._groups.items():
            if group in groups:
                self.set_frozen(name, True)

    def unfreeze_all(self):
        for name in self._tensors:
            self.set_frozen(name, False)

    def trainable_items(self):
        return [(n, t) for n, t in self._tensors.items()
                if not self._frozen[n]]

    def zero_grad(self):
        for t in self._tensors.values():
            t.grad = None

    def size_of_group(self, group):
        return sum(t.size for n, t in self._tensors.items()
                   if self._groups[n] == group)

    def counts(self):
        """(total, trainable, frozen, per-group sizes)."""
        total = sum(t.size for t in self._tensors.values())
        trainable = sum(t.size for _, t in self.trainable_items())
        by_group = {g: 0 for g in GROUPS}
        for n, t in self._tensors.items():
            by_group[self._groups[n]] += t.size
        return total, trainable, total - trainable, by_group


def init_rng(seed, *tags):
    """Deterministic generator derived from a seed and integer tags."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *tags]))


def conv_init(rng, kh, kw, cin, cout):
    """He-style fan-in scaling for conv kernels."""
    std = np.sqrt(2.0 / (kh * kw * cin))
    return rng.normal(0.0, std, size=(kh, kw, cin, cout))


def linear_init(rng, din, dout):
    """Glorot-style scaling for affine weights."""
    std = np.sqrt(2.0 / (din + dout))
    return rng.normal(0.0, std, size=(din, dout))
