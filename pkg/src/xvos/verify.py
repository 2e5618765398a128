"""Full finite-difference verification suite.

Combines the per-op randomized checks with two end-to-end model checks on a
tiny configuration (dim 16, 2 layers, 32x32 frames):

  1. the RGB pretraining configuration, differentiating the clip loss with
     respect to the input frame and every parameter group, and
  2. the adapted configuration (MVP prompting, K=2 rank-2 experts, frozen
     backbone), differentiating with respect to the frame, the X map and
     every trainable parameter.

Large tensors are checked on a deterministic random subset of coordinates;
small ones exhaustively.
"""

from __future__ import annotations

import numpy as np

from .autograd import grad_check, run_op_suite
from .autograd.tensor import Tensor
from .config import ModelConfig
from .errors import ContractError
from .experts import inject_experts
from .foundation import build_model
from .losses import combined_loss
from .params import ADAPT_FROZEN_GROUPS, init_rng

TINY = ModelConfig(dim=16, layers=2, heads=2, chan4=4, chan8=8)


def _toy_inputs(rng, h=32, w=32):
    frame = Tensor(rng.random((h, w, 3)))
    xmap = Tensor(rng.random((h, w, 1)))
    ref_mask = np.zeros((h, w), dtype=np.int64)
    ref_mask[6:16, 6:16] = 1
    gt_mask = np.zeros((h, w), dtype=np.int64)
    gt_mask[10:20, 8:18] = 1
    return frame, xmap, ref_mask, gt_mask


def _model_loss(model, frame, xmap, ref_mask, gt_mask, mode):
    """One teacher-forced prediction step ending in the combined loss."""
    z_r, _, _, _ = model.frame_tokens(frame, xmap, mode)
    m_r = model.mask_embed(ref_mask, 1)
    z_t, p8, p4, grid_hw = model.frame_tokens(frame, xmap, mode)
    zl = model.forward_tokens(z_t, [(z_r, m_r)])
    logits = model.decode(zl, grid_hw, p8, p4, 1)
    # keep_ratio 1 keeps the loss smooth: hardest-pixel selection flips under
    # perturbation would put kinks inside the FD interval
    return combined_loss(logits, gt_mask, keep_ratio=1.0)


def _sample_coords(rng, size, limit):
    if size <= limit:
        return None
    return sorted(int(c) for c in rng.choice(size, size=limit,
                                             replace=False))


def _check_params(model, loss_fn, rng, eps, coords_per_tensor, input_coords,
                  inputs, results, prefix):
    for label, tensor in inputs:
        coords = _sample_coords(rng, tensor.size, input_coords)
        results[f"{prefix}:{label}"] = grad_check(lambda _: loss_fn(),
                                                  tensor, eps, coords)
    for name, tensor in model.store.trainable_items():
        coords = _sample_coords(rng, tensor.size, coords_per_tensor)
        results[f"{prefix}:{name}"] = grad_check(lambda _: loss_fn(),
                                                 tensor, eps, coords)


def run_model_gradcheck(eps=1e-5, coords_per_tensor=12, input_coords=192,
                        seed=0):
    """{check name: max relative error} over both end-to-end checks."""
    results = {}
    rng = init_rng(seed, 11)

    # pretraining configuration: everything trainable, RGB path only
    model = build_model(TINY, seed=seed, prompt_mode="rgb-only")
    frame, xmap, ref_mask, gt_mask = _toy_inputs(init_rng(seed, 12))
    loss_fn = lambda: _model_loss(model, frame, xmap, ref_mask, gt_mask,
                                  "rgb-only")
    _check_params(model, loss_fn, rng, eps, coords_per_tensor, input_coords,
                  [("input-frame", frame)], results, "pretrain")

    # adapted configuration: frozen backbone, MVP prompting, K=2 r=2 experts
    model2 = build_model(TINY, seed=seed, prompt_mode="mvp")
    model2.store.freeze_groups(ADAPT_FROZEN_GROUPS)
    inject_experts(model2, k=2, r=2, seed=seed)
    # nonzero B so the routed path carries real gradients
    b_rng = init_rng(seed, 13)
    for name, tensor in model2.store.items():
        if name.endswith(".B"):
            tensor.data = 0.05 * b_rng.standard_normal(tensor.shape)
    frame2, xmap2, ref2, gt2 = _toy_inputs(init_rng(seed, 14))
    loss_fn2 = lambda: _model_loss(model2, frame2, xmap2, ref2, gt2, "mvp")
    _check_params(model2, loss_fn2, rng, eps, coords_per_tensor,
                  input_coords, [("input-frame", frame2),
                                 ("input-xmap", xmap2)], results, "adapted")
    return results


def run_full_gradcheck(op_seeds=5, eps=1e-5, seed=0, coords_per_tensor=12,
                       input_coords=192):
    """Op catalog plus end-to-end checks. Returns (results dict, max err)."""
    results = {f"op:{k}": v
               for k, v in run_op_suite(seeds=op_seeds, eps=eps).items()}
    results.update(run_model_gradcheck(eps=eps,
                                       coords_per_tensor=coords_per_tensor,
                                       input_coords=input_coords, seed=seed))
    bad = [k for k, v in results.items() if not np.isfinite(v)]
    if bad:
        raise ContractError(f"gradient check produced non-finite errors: "
                            f"{bad}")
    return results, max(results.values())
