"""Minimal reverse-mode autodiff tape over float64 numpy arrays.

A Tensor wraps one ndarray. Ops (see ops.py) produce new Tensors and, when any
input requires gradients, attach a Node recording the inputs and a backward
closure. The implicit DAG of Nodes reachable from a loss tensor is the
computation graph; ``backward`` walks it once in reverse topological order.

Graphs are single-owner: build, forward and backward on one thread. Distinct
graphs share nothing mutable, so separate threads may each run their own.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError

# When False, ops skip Node construction entirely (inference mode).
_grad_enabled = True


class no_grad:
    """Context manager disabling graph construction inside the block."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled():
    return _grad_enabled


class Node:
    """One op record: which tensors fed it and how to push gradients back.

    ``backward_fn(out_grad)`` returns one gradient array (or None) per parent,
    in parent order.
    """

    __slots__ = ("op", "parents", "backward_fn")

    def __init__(self, op, parents, backward_fn):
        self.op = op
        self.parents = parents
        self.backward_fn = backward_fn


class Tensor:
    """N-dimensional float64 array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "node")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.node = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        tag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{tag})"


def make_result(op, out_data, parents, backward_fn):
    """Wrap an op output, attaching a tape node when gradients are live."""
    out = Tensor(out_data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.node = Node(op, tuple(parents), backward_fn)
    return out


def _toposort(root):
    """Iterative post-order over the Node DAG hanging off ``root``."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        t, expanded = stack.pop()
        if id(t) in seen:
            continue
        if expanded:
            seen.add(id(t))
            order.append(t)
            continue
        stack.append((t, True))
        if t.node is not None:
            for p in t.node.parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
    return order


def backward(loss):
    """Populate ``.grad`` on every requires_grad tensor reachable from loss.

    Gradients accumulate (+=) into whatever ``.grad`` already holds; callers
    zero grads between steps. The loss must be scalar.
    """
    if loss.data.size != 1:
        raise ContractError(
            f"backward: loss must be scalar, got shape {loss.shape}"
        )
    if not loss.requires_grad:
        return
    order = _toposort(loss)
    grads = {id(loss): np.ones_like(loss.data)}
    for t in reversed(order):
        g = grads.pop(id(t), None)
        if g is None:
            continue
        if t.grad is None:
            t.grad = g.copy()
        else:
            t.grad = t.grad + g
        if t.node is None:
            continue
        parent_grads = t.node.backward_fn(g)
        for p, pg in zip(t.node.parents, parent_grads):
            if pg is None or not p.requires_grad:
                continue
            acc = grads.get(id(p))
            grads[id(p)] = pg if acc is None else acc + pg


def gradients(loss, params):
    """Backward pass returning ``{name: grad array}`` for a parameter mapping.

    Parameters not reachable from the loss get zero gradients of their shape.
    """
    backward(loss)
    out = {}
    for name, tensor in params.items():
        if tensor.grad is None:
            out[name] = np.zeros_like(tensor.data)
        else:
            out[name] = tensor.grad
    return out
