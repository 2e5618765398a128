"""Finite-difference gradient checking for single ops and whole models."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from . import ops
from .tensor import Tensor, backward, no_grad


def grad_check(fn, x, eps=1e-5, coords=None):
    """Max relative error between analytic and central-difference gradients.

    ``fn`` maps a Tensor to a Tensor; non-scalar outputs are reduced by sum.
    The error per coordinate is |analytic - fd| / max(1, |fd|); NaN anywhere
    propagates into the returned value rather than raising.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ContractError(f"grad_check: eps {eps} outside [1e-7, 1e-3]")
    x.requires_grad = True
    x.zero_grad()

    def scalar(t):
        y = fn(t)
        if y.size != 1:
            y = ops.sum_(y)
        return y

    out = scalar(x)
    backward(out)
    analytic = (np.zeros_like(x.data) if x.grad is None else x.grad).ravel()

    flat = x.data.ravel()
    if coords is None:
        coords = range(flat.size)
    worst = 0.0
    with no_grad():
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            f_plus = float(scalar(x).data.reshape(()))
            flat[c] = orig - eps
            f_minus = float(scalar(x).data.reshape(()))
            flat[c] = orig
            fd = (f_plus - f_minus) / (2.0 * eps)
            err = abs(analytic[c] - fd) / max(1.0, abs(fd))
            if np.isnan(err):
                return float("nan")
            worst = max(worst, err)
    return worst


def _spread_values(rng, shape, scale=0.1):
    """Random values with pairwise gaps well above the FD step, so argmax-
    style ops keep a stable winner under perturbation."""
    n = int(np.prod(shape))
    vals = (rng.permutation(n) + rng.uniform(0.2, 0.8, size=n)) * scale
    return vals.reshape(shape)


def _op_cases(rng):
    """(name, fn, input) triples covering the whole op catalog. Each fn is
    differentiated with respect to its single Tensor argument."""
    def t34():
        return Tensor(rng.standard_normal((3, 4)))

    cases = []

    b_same = t34()
    b_bias = Tensor(rng.standard_normal(4))
    b_scalar = Tensor(2.0 + rng.random())
    cases += [("add", lambda t: ops.add(t, b_same), t34()),
              ("add", lambda t: ops.add(b_same, t), t34()),
              ("add", lambda t: ops.add(t, b_bias), t34()),
              ("sub", lambda t: ops.sub(t, b_same), t34()),
              ("sub", lambda t: ops.sub(b_same, t), t34()),
              ("neg", ops.neg, t34()),
              ("mul", lambda t: ops.mul(t, b_same), t34()),
              ("mul", lambda t: ops.mul(b_same, t), t34()),
              ("mul", lambda t: ops.mul(t, 1.7), t34()),
              ("div", lambda t: ops.div(t, b_scalar), t34()),
              ("div", lambda t: ops.div(b_same,
                                        ops.add(ops.mul(t, t), 1.5)), t34())]

    m_a = Tensor(rng.standard_normal((3, 5)))
    m_b = Tensor(rng.standard_normal((5, 2)))
    bm_b = Tensor(rng.standard_normal((2, 4, 3)))
    cases += [("matmul", lambda t: ops.matmul(t, m_b), m_a.detach()),
              ("matmul", lambda t: ops.matmul(m_a, t), m_b.detach()),
              ("matmul", lambda t: ops.matmul(t, bm_b),
               Tensor(rng.standard_normal((2, 3, 4))))]

    lw = Tensor(rng.standard_normal((4, 3)))
    lb = Tensor(rng.standard_normal(3))
    lx = t34()
    cases += [("linear", lambda t: ops.linear(t, lw, lb), t34()),
              ("linear", lambda t: ops.linear(lx, t, lb), lw.detach()),
              ("linear", lambda t: ops.linear(lx, lw, t), lb.detach())]

    cases += [("reshape", lambda t: ops.reshape(t, (2, 6)), t34()),
              ("transpose", lambda t: ops.transpose(t, (1, 0)), t34()),
              ("transpose", lambda t: ops.transpose(t, (2, 0, 1)),
               Tensor(rng.standard_normal((2, 3, 4)))),
              ("concat", lambda t: ops.concat([t, b_same], axis=1), t34()),
              ("narrow", lambda t: ops.narrow(t, 1, 1, 2), t34()),
              ("gather", lambda t: ops.gather(t, np.array([2, 0, 2])), t34()),
              ("sum", lambda t: ops.sum_(t), t34()),
              ("sum", lambda t: ops.sum_(t, axis=1), t34()),
              ("mean", lambda t: ops.mean(t, axis=0, keepdims=True), t34()),
              ("sigmoid", ops.sigmoid, t34()),
              ("gelu", ops.gelu, t34()),
              ("softmax", ops.softmax, t34()),
              ("log_softmax", ops.log_softmax, t34())]

    ln_g = Tensor(rng.standard_normal(4))
    ln_b = Tensor(rng.standard_normal(4))
    ln_x = t34()
    cases += [("layer_norm", lambda t: ops.layer_norm(t, ln_g, ln_b), t34()),
              ("layer_norm", lambda t: ops.layer_norm(ln_x, t, ln_b),
               ln_g.detach()),
              ("layer_norm", lambda t: ops.layer_norm(ln_x, ln_g, t),
               ln_b.detach())]

    cx = Tensor(rng.standard_normal((6, 6, 2)))
    cw = Tensor(0.3 * rng.standard_normal((3, 3, 2, 3)))
    cb = Tensor(rng.standard_normal(3))
    cases += [("conv2d", lambda t: ops.conv2d(t, cw, cb, stride=1, padding=1),
               cx.detach()),
              ("conv2d", lambda t: ops.conv2d(cx, t, cb, stride=2, padding=0),
               cw.detach()),
              ("conv2d", lambda t: ops.conv2d(cx, cw, t, stride=1, padding=1),
               cb.detach())]

    grid = lambda: Tensor(rng.standard_normal((4, 4, 3)))
    sep = lambda shp: Tensor(_spread_values(rng, shp))
    cases += [("avg_pool_spatial", lambda t: ops.avg_pool_spatial(t), grid()),
              ("avg_pool_spatial",
               lambda t: ops.avg_pool_spatial(t, window=2), grid()),
              ("max_pool_spatial", lambda t: ops.max_pool_spatial(t),
               sep((4, 4, 3))),
              ("max_pool_spatial",
               lambda t: ops.max_pool_spatial(t, window=2), sep((4, 4, 3))),
              ("avg_pool_channel", ops.avg_pool_channel, grid()),
              ("max_pool_channel", ops.max_pool_channel, sep((4, 4, 3))),
              ("upsample_nearest", lambda t: ops.upsample_nearest(t, 2),
               grid()),
              ("upsample_bilinear", lambda t: ops.upsample_bilinear(t, 2),
               grid())]

    aq = Tensor(rng.standard_normal((4, 6)))
    ak = Tensor(rng.standard_normal((4, 6)))
    av = Tensor(rng.standard_normal((4, 6)))
    cases += [("attention", lambda t: ops.attention(t, ak, av, 2),
               aq.detach()),
              ("attention", lambda t: ops.attention(aq, t, av, 2),
               ak.detach()),
              ("attention", lambda t: ops.attention(aq, ak, t, 2),
               av.detach())]
    return cases


def run_op_suite(seeds=20, eps=1e-5, base_seed=0):
    """Gradient-check every op on randomized small shapes.

    Returns {op name: max relative error over all seeds and inputs}.
    """
    worst = {}
    for s in range(seeds):
        rng = np.random.default_rng(base_seed + s)
        for name, fn, x in _op_cases(rng):
            err = grad_check(fn, x, eps=eps)
            worst[name] = max(worst.get(name, 0.0), err)
    return worst
