"""Segmentation losses: soft Jaccard + bootstrapped cross-entropy.

Both consume (H, W, O+1) outputs over background and O objects and an integer
ground-truth mask. The soft Jaccard term averages over object ids (background
excluded); an id absent from both the ground truth and the prediction argmax
contributes no term. The bootstrapped cross-entropy keeps only the hardest
``keep_ratio`` fraction of pixels.
"""

from __future__ import annotations

import math

import numpy as np

from .autograd import ops
from .autograd.tensor import Tensor
from .errors import ContractError, ShapeError


def _check_mask(op, out, gt):
    gt = np.asarray(gt)
    if gt.shape != out.shape[:2]:
        raise ShapeError(op, f"mask {gt.shape} vs output {out.shape[:2]}")
    if gt.max() >= out.shape[2]:
        raise ContractError(f"{op}: mask id {gt.max()} exceeds "
                            f"{out.shape[2]} channels")
    return gt


def soft_jaccard_loss(probs, gt):
    """1 - mean soft IoU over object ids present in gt or predicted.

    ``probs`` must be per-pixel normalized (softmax output)."""
    if not isinstance(probs, Tensor):
        probs = Tensor(probs)
    gt = _check_mask("soft_jaccard_loss", probs, gt)
    pred_ids = np.argmax(probs.data, axis=2)
    num_ch = probs.shape[2]
    active = [o for o in range(1, num_ch)
              if (gt == o).any() or (pred_ids == o).any()]
    if not active:
        return ops.zeros(())
    h, w, _ = probs.shape
    terms = []
    for o in active:
        g = Tensor((gt == o).astype(np.float64))
        p = ops.reshape(ops.narrow(probs, 2, o, 1), (h, w))
        inter = ops.sum_(ops.mul(p, g))
        union = ops.sub(ops.add(ops.sum_(p), ops.sum_(g)), inter)
        terms.append(ops.reshape(ops.div(inter, union), (1,)))
    miou = ops.mean(ops.concat(terms, axis=0))
    loss = ops.sub(1.0, ops.reshape(miou, (1,)))
    return ops.reshape(loss, ())


def pixel_cross_entropy(logits, gt):
    """(H, W) map of per-pixel cross-entropies against the mask ids."""
    gt = _check_mask("bootstrapped_ce_loss", logits, gt)
    lp = ops.log_softmax(logits)
    onehot = Tensor(ops.one_hot(gt, logits.shape[2]))
    picked = ops.sum_(ops.mul(lp, onehot), axis=2)
    return ops.neg(picked)


def bootstrapped_ce_loss(logits, gt, keep_ratio=1.0):
    """Mean cross-entropy over the ceil(keep_ratio * HW) hardest pixels."""
    if not 0.0 < keep_ratio <= 1.0:
        raise ContractError(f"keep_ratio {keep_ratio} outside (0, 1]")
    ce = pixel_cross_entropy(logits, gt)
    h, w = ce.shape
    n = h * w
    k = math.ceil(keep_ratio * n)
    flat = ops.reshape(ce, (n,))
    if k >= n:
        return ops.mean(flat)
    idx = np.argpartition(-flat.data, k - 1)[:k]
    return ops.mean(ops.gather(flat, idx))


def combined_loss(logits, gt, keep_ratio=1.0):
    """0.5 * bootstrapped cross-entropy + 0.5 * soft Jaccard."""
    ce = bootstrapped_ce_loss(logits, gt, keep_ratio)
    sj = soft_jaccard_loss(ops.softmax(logits), gt)
    return ops.add(ops.mul(ce, 0.5), ops.mul(sj, 0.5))


def keep_ratio_schedule(step, total_steps, floor=0.15, warmup_frac=0.1):
    """1.0 for the first ``warmup_frac`` of training, then a linear anneal
    down to ``floor`` by the final step."""
    if total_steps <= 1:
        return 1.0
    warm = warmup_frac * total_steps
    if step <= warm:
        return 1.0
    frac = (step - warm) / max(1.0, total_steps - warm)
    return max(floor, 1.0 + (floor - 1.0) * frac)
