"""Low-rank modality adaptation experts with per-token softmax routing.

Each designated linear layer (MSA output projection and both FFN linears)
gains K rank-r expert pairs (A_i, B_i) plus a router matrix. The adapted
output is

    h' = W0 h + sum_i softmax_i(h w_R) * (B_i A_i h)

computed factored, never materializing the dense deltas. B starts at zero so
a freshly injected model is forward-identical to the frozen one. With K=1 the
softmax weight is identically 1 and the layer reduces to plain LoRA.

The same module hosts the two parameter-efficient ablation baselines: plain
LoRA (a single expert pair without a router) and a bottleneck adapter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import ops
from .errors import ContractError
from .foundation import EXPERT_TARGETS
from .params import init_rng


class Expert:
    """One low-rank pair: A is (r, D_in), B is (D_out, r), B zero-init."""

    def __init__(self, a, b):
        self.a = a
        self.b = b


class ExpertBank:
    """K experts plus router weights (D_in, K); router is None for the plain
    LoRA baseline."""

    def __init__(self, experts, router):
        self.experts = experts
        self.router = router

    @property
    def k(self):
        return len(self.experts)


def expert_delta(h, expert):
    """Factored low-rank adaptation: (h A^T) B^T."""
    ha = ops.matmul(h, ops.transpose(expert.a, (1, 0)))
    return ops.matmul(ha, ops.transpose(expert.b, (1, 0)))


def route(h, bank):
    """Per-token softmax mixture of expert deltas."""
    if bank.k == 0:
        raise ContractError("route: empty expert bank")
    deltas = [expert_delta(h, e) for e in bank.experts]
    if bank.k == 1 and bank.router is None:
        return deltas[0]
    d_out = deltas[0].shape[1]
    weights = ops.softmax(ops.matmul(h, bank.router))
    ones_row = ops.ones((1, d_out))
    out = None
    for i, delta in enumerate(deltas):
        w_col = ops.narrow(weights, 1, i, 1)
        term = ops.mul(ops.matmul(w_col, ones_row), delta)
        out = term if out is None else ops.add(out, term)
    return out


def adapted_linear(h, w0, b0, bank):
    """Frozen affine path plus routed adaptation."""
    if w0.requires_grad:
        raise ContractError("adapted_linear: base weight must be frozen")
    base = ops.linear(h, w0, b0)
    if bank is None or bank.k == 0:
        return base
    return ops.add(base, route(h, bank))


def _target_dims(cfg, target):
    d = cfg.dim
    hid = d * cfg.ffn_mult
    return {"msa-output": (d, d), "ffn-first": (d, hid),
            "ffn-second": (hid, d)}[target]


@dataclass
class ParamReport:
    """Itemized parameter accounting.

    ``adapt_ratio`` is adaptation parameters (experts + routers) over the
    total, the quantity the adaptation-mechanism ablations tabulate;
    ``trainable_ratio`` counts every unfrozen parameter.
    """
    total: int
    trainable: int
    frozen: int
    by_group: dict

    @property
    def adapt_params(self):
        return self.by_group.get("experts", 0)

    @property
    def adapt_ratio(self):
        return self.adapt_params / self.total if self.total else 0.0

    @property
    def trainable_ratio(self):
        return self.trainable / self.total if self.total else 0.0

    def lines(self):
        out = [f"total params           {self.total:>12,}",
               f"trainable              {self.trainable:>12,} "
               f"({100 * self.trainable_ratio:.2f}%)",
               f"frozen                 {self.frozen:>12,}"]
        for group, n in sorted(self.by_group.items()):
            out.append(f"  group {group:<12} {n:>12,}")
        out.append(f"adaptation params      {self.adapt_params:>12,} "
                   f"({100 * self.adapt_ratio:.2f}% of total)")
        return out

    def __str__(self):
        return "\n".join(self.lines())


def param_report(store):
    total, trainable, frozen, by_group = store.counts()
    return ParamReport(total, trainable, frozen, by_group)


def expert_param_count(cfg, k, r, targets=EXPERT_TARGETS, layers=None):
    """Closed-form adaptation parameter count:
    sum over layers and targets of K*r*(D_in + D_out) + K*D_in (router)."""
    layers = cfg.layers if layers is None else layers
    n = 0
    for target in targets:
        din, dout = _target_dims(cfg, target)
        n += k * r * (din + dout) + din * k
    return n * layers


def inject_experts(model, k, r, targets=None, seed=0):
    """Wrap every designated linear with a K-expert bank; returns the
    post-injection parameter report. ``k=0`` is a no-op."""
    targets = tuple(targets) if targets else EXPERT_TARGETS
    for t in targets:
        if t not in EXPERT_TARGETS:
            raise ContractError(f"unknown expert target '{t}' (choose from "
                                f"{EXPERT_TARGETS})")
    if r < 1:
        raise ContractError("expert rank must be >= 1")
    if k < 0:
        raise ContractError("expert count must be >= 0")
    rng = init_rng(seed, 7)
    if k > 0:
        for li, layer in enumerate(model.layers):
            for target in targets:
                din, dout = _target_dims(model.cfg, target)
                experts = []
                for i in range(k):
                    a = model.store.register(
                        f"layer{li}.{target}.expert{i}.A",
                        rng.normal(0.0, 0.02, size=(r, din)), "experts")
                    b = model.store.register(
                        f"layer{li}.{target}.expert{i}.B",
                        np.zeros((dout, r)), "experts")
                    experts.append(Expert(a, b))
                router = model.store.register(
                    f"layer{li}.{target}.router",
                    np.zeros((din, k)), "experts")
                layer.banks[target] = ExpertBank(experts, router)
    return param_report(model.store)


def inject_lora(model, r, targets=None, seed=0):
    """Plain-LoRA baseline: one expert pair per target, no router."""
    targets = tuple(targets) if targets else EXPERT_TARGETS
    rng = init_rng(seed, 7)
    for li, layer in enumerate(model.layers):
        for target in targets:
            din, dout = _target_dims(model.cfg, target)
            a = model.store.register(f"layer{li}.{target}.lora.A",
                                     rng.normal(0.0, 0.02, size=(r, din)),
                                     "experts")
            b = model.store.register(f"layer{li}.{target}.lora.B",
                                     np.zeros((dout, r)), "experts")
            layer.banks[target] = ExpertBank([Expert(a, b)], None)
    return param_report(model.store)


class BottleneckAdapter:
    """Residual down/GELU/up adapter appended to a transformer layer."""

    def __init__(self, store, name, dim, hidden, rng):
        self.w_down = store.register(f"{name}.down.w",
                                     rng.normal(0.0, 0.02,
                                                size=(dim, hidden)),
                                     "experts")
        self.b_down = store.register(f"{name}.down.b", np.zeros(hidden),
                                     "experts")
        self.w_up = store.register(f"{name}.up.w", np.zeros((hidden, dim)),
                                   "experts")
        self.b_up = store.register(f"{name}.up.b", np.zeros(dim), "experts")

    def __call__(self, z):
        h = ops.gelu(ops.linear(z, self.w_down, self.b_down))
        return ops.add(z, ops.linear(h, self.w_up, self.b_up))


def inject_adapters(model, hidden=None, seed=0):
    """Bottleneck-adapter baseline: one residual adapter per encoder layer."""
    rng = init_rng(seed, 7)
    hidden = hidden or max(4, model.cfg.dim // 64)
    for li, layer in enumerate(model.layers):
        layer.adapter = BottleneckAdapter(model.store,
                                          f"layer{li}.adapter",
                                          model.cfg.dim, hidden, rng)
    return param_report(model.store)
