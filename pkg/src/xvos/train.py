"""Two-stage training protocol.

Stage 1 (pretrain): foundation encoder, decoder and RGB patch embedding train
on RGB-only synthetic video. Stage 2 (adapt): those groups freeze; the
X-modality patch embedding, the prompter and the adaptation mechanism
(experts / LoRA / bottleneck adapters, per ablation mode) train on RGB-X data.

Each step samples a 3-frame clip and teacher-forces the reference masks: the
loss covers both predicted frames, conditioning on the first clip frame plus
the immediately preceding frame with ground-truth masks.
"""

from __future__ import annotations

import dataclasses

from .autograd import ops
from .autograd.tensor import backward
from .checkpoint import apply_checkpoint, load_checkpoint, save_checkpoint
from .config import ModelConfig
from .errors import ContractError
from .experts import (inject_adapters, inject_experts, inject_lora,
                      param_report)
from .foundation import build_model
from .losses import combined_loss, keep_ratio_schedule
from .optim import Adam
from .params import ADAPT_FROZEN_GROUPS, init_rng


def clip_loss(model, sample, start, clip_len, keep_ratio, mode=None):
    """Mean combined loss over the predicted frames of one clip."""
    num_obj = sample.num_objects
    idx = list(range(start, start + clip_len))
    toks = {}
    membeds = {}

    def tokens_of(t):
        if t not in toks:
            toks[t] = model.frame_tokens(sample.frames[t], sample.xmaps[t],
                                         mode)
        return toks[t]

    def mask_embed_of(t):
        if t not in membeds:
            membeds[t] = model.mask_embed(sample.masks[t], num_obj)
        return membeds[t]

    losses = []
    for i in range(1, len(idx)):
        t = idx[i]
        ref_ids = [idx[0]] if idx[i - 1] == idx[0] else [idx[0], idx[i - 1]]
        refs = [(tokens_of(r)[0], mask_embed_of(r)) for r in ref_ids]
        z_t, p8, p4, grid_hw = tokens_of(t)
        zl = model.forward_tokens(z_t, refs)
        logits = model.decode(zl, grid_hw, p8, p4, num_obj)
        losses.append(ops.reshape(
            combined_loss(logits, sample.masks[t], keep_ratio), (1,)))
    return ops.reshape(ops.mean(ops.concat(losses, axis=0)), ())


def train_loop(model, data, steps, lr, clip_len=3, keep_ratio_floor=0.15,
               keep_warmup_frac=0.1, seed=0, log_every=0, mode=None):
    """Run the sampling/optimize loop; returns [(step, loss)] history."""
    if not data:
        raise ContractError("training requires at least one sequence")
    if not model.store.trainable_items():
        return []
    if any(s.frames.shape[0] < 2 for s in data):
        raise ContractError("training clips need at least 2 frames per "
                            "sequence")
    opt = Adam(model.store, lr)
    rng = init_rng(seed, 2)
    history = []
    for step in range(1, steps + 1):
        sample = data[int(rng.integers(len(data)))]
        t_total = sample.frames.shape[0]
        span = max(0, t_total - clip_len)
        start = int(rng.integers(span + 1))
        kr = keep_ratio_schedule(step, steps, keep_ratio_floor,
                                 keep_warmup_frac)
        model.store.zero_grad()
        loss = clip_loss(model, sample, start, min(clip_len, t_total), kr,
                         mode)
        backward(loss)
        opt.step()
        history.append((step, loss.item()))
        if log_every and step % log_every == 0:
            print(f"  step {step:>6}  loss {loss.item():.4f}")
    return history


def _meta_for(cfg, stage, prompt_mode="rgb-only", adapt_mode=None,
              experts=0, rank=0):
    return {"model": dataclasses.asdict(cfg), "stage": stage,
            "prompt_mode": prompt_mode, "adapt_mode": adapt_mode,
            "experts": experts, "rank": rank}


def pretrain(cfg, train_cfg, data, seed=0, out=None, log=False):
    """Stage 1: train everything on RGB-only clips; optionally checkpoint."""
    model = build_model(cfg, seed=seed, prompt_mode="rgb-only")
    history = train_loop(model, data, train_cfg.steps, train_cfg.lr,
                         train_cfg.clip_len, train_cfg.keep_ratio_floor,
                         train_cfg.keep_warmup_frac, seed=seed,
                         log_every=train_cfg.log_every if log else 0)
    if out:
        save_checkpoint(out, model.store, _meta_for(cfg, "pretrain"))
    return model, history


def _apply_adapt_mode(model, adapt_mode, experts, rank, seed):
    if adapt_mode == "maes":
        return inject_experts(model, experts, rank, seed=seed)
    if adapt_mode == "lora":
        return inject_lora(model, rank, seed=seed)
    if adapt_mode == "adapter":
        return inject_adapters(model, seed=seed)
    if adapt_mode in ("frozen", "full-ft"):
        return param_report(model.store)
    raise ContractError(f"unknown adapt_mode '{adapt_mode}'")


def adapt(adapt_cfg, checkpoint_path, data, seed=0, out=None, log=False):
    """Stage 2: load a pretrain checkpoint, enforce the freeze policy,
    attach the adaptation mechanism and train on RGB-X clips.

    Returns (model, parameter report, history)."""
    if not checkpoint_path:
        raise ContractError("adaptation requires a pretrained checkpoint")
    try:
        meta, entries = load_checkpoint(checkpoint_path)
    except FileNotFoundError as exc:
        raise ContractError(f"pretrained checkpoint not found: "
                            f"{exc}") from exc
    cfg = ModelConfig(**meta["model"])
    model = build_model(cfg, seed=seed, prompt_mode=adapt_cfg.prompt_mode)
    apply_checkpoint(model.store, entries, strict=False)
    if adapt_cfg.adapt_mode != "full-ft":
        model.store.freeze_groups(ADAPT_FROZEN_GROUPS)
    report = _apply_adapt_mode(model, adapt_cfg.adapt_mode,
                               adapt_cfg.experts, adapt_cfg.rank, seed)
    history = train_loop(model, data, adapt_cfg.steps, adapt_cfg.lr,
                         adapt_cfg.clip_len, adapt_cfg.keep_ratio_floor,
                         adapt_cfg.keep_warmup_frac, seed=seed,
                         log_every=adapt_cfg.log_every if log else 0)
    if out:
        save_checkpoint(out, model.store,
                        _meta_for(cfg, "adapt", adapt_cfg.prompt_mode,
                                  adapt_cfg.adapt_mode, adapt_cfg.experts,
                                  adapt_cfg.rank))
    return model, report, history


def load_model(checkpoint_path, seed=0):
    """Rebuild a model (including any adaptation mechanism) from a
    checkpoint; parameter values and freeze flags come from the manifest."""
    meta, entries = load_checkpoint(checkpoint_path)
    cfg = ModelConfig(**meta["model"])
    model = build_model(cfg, seed=seed,
                        prompt_mode=meta.get("prompt_mode", "rgb-only"))
    adapt_mode = meta.get("adapt_mode")
    if adapt_mode and adapt_mode not in ("frozen", "full-ft"):
        _apply_adapt_mode(model, adapt_mode, meta.get("experts", 0),
                          meta.get("rank", 1), seed)
    apply_checkpoint(model.store, entries, strict=True)
    for name, rec in entries.items():
        model.store.set_frozen(name, rec["frozen"])
    return model, meta
