"""RGB video-object-segmentation foundation model.

Pieces:
  - three-stage convolutional patch embedding (strides 4/2/2, tokens at 4x,
    8x and 16x) for RGB and, during adaptation, for the X modality
  - a mask embedding layer (single stride-16 convolution over one-hot object
    planes; the background plane is kept all-zero so an empty mask embeds to
    the layer's bias pattern)
  - transformer encoder layers with post-norm residuals, where reference-token
    attention values carry the mask embedding additively; current-frame
    values carry no mask term
  - an FPN-style decoder: two upsampling stages with multi-scale prompt
    residuals fused right before each stage's pre-upsample linear, then a
    final x4 bilinear and 1x1 conv to per-object logits
  - a greedy two-reference inference driver (first frame + most recent frame)

A built model with fixed parameters is immutable during inference and safe to
share across threads; training mutates parameters single-writer.
"""

from __future__ import annotations

import numpy as np

from .autograd import ops
from .autograd.tensor import Tensor, no_grad
from .errors import ContractError, ShapeError
from .params import conv_init, init_rng, linear_init

EXPERT_TARGETS = ("msa-output", "ffn-first", "ffn-second")


def _flatten_grid(grid):
    h, w, d = grid.shape
    return ops.reshape(grid, (h * w, d))


def _linear_grid(grid, w, b):
    """Affine map over the channel axis of an (H, W, C) grid."""
    h, wd, c = grid.shape
    flat = ops.reshape(grid, (h * wd, c))
    out = ops.linear(flat, w, b)
    return ops.reshape(out, (h, wd, w.shape[1]))


class PatchEmbed:
    """Progressive-downsampling conv embedding: 4x4/s4, 2x2/s2, 2x2/s2.

    Returns the raw stage outputs as the 4x / 8x / 16x token grids; GELU sits
    between stages only.
    """

    def __init__(self, store, prefix, group, in_ch, cfg, rng, init="random"):
        c4, c8, d = cfg.chan4, cfg.chan8, cfg.dim

        def reg(name, shape, fn):
            data = np.zeros(shape) if init == "zeros" else fn()
            return store.register(f"{prefix}.{name}", data, group)

        self.w1 = reg("stage1.w", (4, 4, in_ch, c4),
                      lambda: conv_init(rng, 4, 4, in_ch, c4))
        self.b1 = reg("stage1.b", (c4,), lambda: np.zeros(c4))
        self.w2 = reg("stage2.w", (2, 2, c4, c8),
                      lambda: conv_init(rng, 2, 2, c4, c8))
        self.b2 = reg("stage2.b", (c8,), lambda: np.zeros(c8))
        self.w3 = reg("stage3.w", (2, 2, c8, d),
                      lambda: conv_init(rng, 2, 2, c8, d))
        self.b3 = reg("stage3.b", (d,), lambda: np.zeros(d))
        self.in_ch = in_ch

    def __call__(self, image):
        if image.ndim != 3 or image.shape[2] != self.in_ch:
            raise ShapeError("patch_embed", f"expected (H, W, {self.in_ch}), "
                                            f"got {image.shape}")
        if image.shape[0] % 16 or image.shape[1] % 16:
            raise ContractError(f"frame dims {image.shape[:2]} not divisible "
                                "by 16")
        t4 = ops.conv2d(image, self.w1, self.b1, stride=4)
        t8 = ops.conv2d(ops.gelu(t4), self.w2, self.b2, stride=2)
        t16 = ops.conv2d(ops.gelu(t8), self.w3, self.b3, stride=2)
        return t4, t8, t16


class MaskEmbed:
    """Single stride-16 convolution over one-hot object planes."""

    def __init__(self, store, cfg, rng, init="random"):
        d, om = cfg.dim, cfg.max_objects
        wdata = (np.zeros((16, 16, om + 1, d)) if init == "zeros"
                 else conv_init(rng, 16, 16, om + 1, d))
        self.w = store.register("mask_embed.w", wdata, "foundation")
        self.b = store.register("mask_embed.b", np.zeros(d), "foundation")
        self.max_objects = om

    def __call__(self, mask, num_objects):
        if num_objects > self.max_objects:
            raise ContractError(f"{num_objects} objects exceed max "
                                f"{self.max_objects}")
        if mask.shape[0] % 16 or mask.shape[1] % 16:
            raise ContractError(f"mask dims {mask.shape} not divisible by 16")
        planes = ops.one_hot(mask, self.max_objects + 1, zero_class0=True)
        grid = ops.conv2d(Tensor(planes), self.w, self.b, stride=16)
        return _flatten_grid(grid)


class EncoderLayer:
    """Post-norm residual transformer layer with mask-embedded values.

    Optional per-target expert banks (set by the adaptation machinery) wrap
    the MSA output projection and both FFN linears; an optional bottleneck
    adapter (ablation baseline) follows the layer.
    """

    def __init__(self, store, index, cfg, rng, init="random"):
        d = cfg.dim
        hid = d * cfg.ffn_mult
        p = f"encoder.layer{index}"

        def reg(name, shape, fn):
            data = np.zeros(shape) if init == "zeros" else fn()
            return store.register(f"{p}.{name}", data, "foundation")

        def lin(name, din, dout):
            w = reg(f"{name}.w", (din, dout),
                    lambda: linear_init(rng, din, dout))
            b = reg(f"{name}.b", (dout,), lambda: np.zeros(dout))
            return w, b

        self.wq, self.bq = lin("attn.q", d, d)
        self.wk, self.bk = lin("attn.k", d, d)
        self.wv, self.bv = lin("attn.v", d, d)
        self.wo, self.bo = lin("attn.out", d, d)
        self.ln1_g = reg("ln1.g", (d,), lambda: np.ones(d))
        self.ln1_b = reg("ln1.b", (d,), lambda: np.zeros(d))
        self.w1, self.b1 = lin("ffn.fc1", d, hid)
        self.w2, self.b2 = lin("ffn.fc2", hid, d)
        self.ln2_g = reg("ln2.g", (d,), lambda: np.ones(d))
        self.ln2_b = reg("ln2.b", (d,), lambda: np.zeros(d))
        self.heads = cfg.heads
        self.eps = cfg.ln_eps
        self.dim = d
        self.banks = {t: None for t in EXPERT_TARGETS}
        self.adapter = None

    def _adapted(self, h, w, b, target):
        bank = self.banks[target]
        if bank is None:
            return ops.linear(h, w, b)
        from .experts import adapted_linear
        return adapted_linear(h, w, b, bank)

    def __call__(self, z, m_r, n_t):
        t = z.shape[0]
        n_r = t - n_t
        if m_r.shape[0] != n_r:
            raise ShapeError("encoder_layer", f"mask embedding rows "
                                              f"{m_r.shape[0]} != reference "
                                              f"segment {n_r}")
        q = ops.linear(z, self.wq, self.bq)
        k = ops.linear(z, self.wk, self.bk)
        v = ops.linear(z, self.wv, self.bv)
        if n_r:
            pad = ops.concat([ops.zeros((n_t, self.dim)), m_r], axis=0)
            v = ops.add(v, pad)
        att = ops.attention(q, k, v, self.heads)
        msa = self._adapted(att, self.wo, self.bo, "msa-output")
        z1 = ops.add(ops.layer_norm(msa, self.ln1_g, self.ln1_b, self.eps), z)
        h = ops.gelu(self._adapted(z1, self.w1, self.b1, "ffn-first"))
        f = self._adapted(h, self.w2, self.b2, "ffn-second")
        z2 = ops.add(ops.layer_norm(f, self.ln2_g, self.ln2_b, self.eps), z1)
        if self.adapter is not None:
            z2 = self.adapter(z2)
        return z2


class Decoder:
    """FPN decoder; GELU after each 3x3 conv, prompts fused residually at 8x
    and 4x immediately before the following pre-upsample linear."""

    def __init__(self, store, cfg, rng, init="random"):
        d, c8, c4, om = cfg.dim, cfg.chan8, cfg.chan4, cfg.max_objects

        def reg(name, shape, fn):
            data = np.zeros(shape) if init == "zeros" else fn()
            return store.register(f"decoder.{name}", data, "decoder")

        def lin(name, din, dout):
            w = reg(f"{name}.w", (din, dout),
                    lambda: linear_init(rng, din, dout))
            b = reg(f"{name}.b", (dout,), lambda: np.zeros(dout))
            return w, b

        def conv(name, k, cin, cout):
            w = reg(f"{name}.w", (k, k, cin, cout),
                    lambda: conv_init(rng, k, k, cin, cout))
            b = reg(f"{name}.b", (cout,), lambda: np.zeros(cout))
            return w, b

        self.reduce16 = lin("reduce16", d, c8)
        self.conv8 = conv("conv8", 3, c8, c8)
        self.reduce8 = lin("reduce8", c8, c4)
        self.conv4 = conv("conv4", 3, c4, c4)
        self.fuse4 = lin("fuse4", c4, c4)
        self.head = conv("head", 1, c4, om + 1)
        self.max_objects = om

    def __call__(self, f16, p8, p4, num_objects):
        if num_objects > self.max_objects:
            raise ContractError(f"{num_objects} objects exceed max "
                                f"{self.max_objects}")
        x = _linear_grid(f16, *self.reduce16)
        x = ops.upsample_bilinear(x, 2)
        x = ops.gelu(ops.conv2d(x, *self.conv8, padding=1))
        if p8 is not None:
            if p8.shape != x.shape:
                raise ShapeError("decode_mask", f"8x prompt {p8.shape} vs "
                                                f"features {x.shape}")
            x = ops.add(x, p8)
        x = _linear_grid(x, *self.reduce8)
        x = ops.upsample_bilinear(x, 2)
        x = ops.gelu(ops.conv2d(x, *self.conv4, padding=1))
        if p4 is not None:
            if p4.shape != x.shape:
                raise ShapeError("decode_mask", f"4x prompt {p4.shape} vs "
                                                f"features {x.shape}")
            x = ops.add(x, p4)
        x = _linear_grid(x, *self.fuse4)
        x = ops.upsample_bilinear(x, 4)
        logits = ops.conv2d(x, *self.head)
        return ops.narrow(logits, 2, 0, num_objects + 1)


class FoundationModel:
    """Foundation model plus (optionally) the X-modality prompt path.

    ``prompt_mode``:
      rgb-only  - pretraining / RGB evaluation; no X parameters exist
      x-only    - X tokens alone drive the frozen encoder
      concat    - fused tokens (linear 2D->D) without spatial-modal attention
      mvp       - full multi-modal visual prompter
    """

    def __init__(self, cfg, store, rgb_embed, mask_embed, layers, decoder,
                 x_embed=None, prompter=None, prompt_mode="rgb-only"):
        self.cfg = cfg
        self.store = store
        self.rgb_embed = rgb_embed
        self.mask_embed = mask_embed
        self.layers = layers
        self.decoder = decoder
        self.x_embed = x_embed
        self.prompter = prompter
        self.prompt_mode = prompt_mode

    # -- per-frame token construction ------------------------------------

    def frame_tokens(self, frame, xmap=None, mode=None):
        """Stride-16 prompt tokens plus 8x/4x decoder laterals for a frame.

        ``mode`` overrides the model's prompt mode ("rgb-only" forces the RGB
        path regardless of how the model was built).
        """
        mode = mode or self.prompt_mode
        frame_t = frame if isinstance(frame, Tensor) else Tensor(frame)
        if mode == "rgb-only":
            t4, t8, t16 = self.rgb_embed(frame_t)
            return _flatten_grid(t16), t8, t4, t16.shape[:2]
        if self.x_embed is None:
            raise ContractError(f"prompt mode '{mode}' needs an X embedding")
        if xmap is None:
            raise ContractError(f"prompt mode '{mode}' needs an X-modality "
                                "map")
        xmap_t = xmap if isinstance(xmap, Tensor) else Tensor(xmap)
        x4, x8, x16 = self.x_embed(xmap_t)
        if mode == "x-only":
            return _flatten_grid(x16), x8, x4, x16.shape[:2]
        r4, r8, r16 = self.rgb_embed(frame_t)
        z16 = self.prompter.prompt_grid(r16, x16)
        p4, p8 = self.prompter.multiscale(r4, x4, r8, x8)
        return z16, p8, p4, r16.shape[:2]

    # -- encoder ----------------------------------------------------------

    def forward_tokens(self, z_t, refs):
        """Run the encoder over [current | references] and return the
        current-frame slice. ``refs`` is a list of (tokens, mask_embedding)
        pairs."""
        n_t = z_t.shape[0]
        parts = [z_t] + [r for r, _ in refs]
        z = ops.concat(parts, axis=0) if refs else z_t
        m_r = (ops.concat([m for _, m in refs], axis=0) if refs
               else ops.zeros((0, self.cfg.dim)))
        for layer in self.layers:
            z = layer(z, m_r, n_t)
        return ops.narrow(z, 0, 0, n_t) if refs else z

    def decode(self, zl_t, grid_hw, p8, p4, num_objects):
        h16, w16 = grid_hw
        f16 = ops.reshape(zl_t, (h16, w16, self.cfg.dim))
        return self.decoder(f16, p8, p4, num_objects)

    # -- inference --------------------------------------------------------

    def segment_video(self, frames, xmaps, first_mask, mode=None):
        """Propagate the first-frame mask through a video.

        References are the first frame (given mask) and the most recent frame
        (predicted mask). Returns one integer mask per frame; frame 1 is the
        input mask verbatim. Argmax ties resolve to the smallest id, so exact
        ties fall to background.
        """
        mode = mode or ("rgb-x" if self.prompt_mode != "rgb-only"
                        else "rgb-only")
        if mode not in ("rgb-only", "rgb-x"):
            raise ContractError(f"unknown segmentation mode '{mode}'")
        if mode == "rgb-x" and self.prompt_mode == "rgb-only":
            raise ContractError("rgb-x segmentation needs a model built "
                                "with an X prompt path")
        token_mode = "rgb-only" if mode == "rgb-only" else self.prompt_mode
        if len(frames) == 0:
            raise ContractError("empty video")
        first_mask = np.asarray(first_mask)
        num_objects = int(first_mask.max())
        masks = [first_mask.astype(np.uint8)]
        with no_grad():
            token_cache = {}

            def tokens_of(t):
                if t not in token_cache:
                    xm = xmaps[t] if xmaps is not None else None
                    token_cache[t] = self.frame_tokens(frames[t], xm,
                                                       token_mode)
                return token_cache[t]

            mask_cache = {}

            def mask_embed_of(t):
                if t not in mask_cache:
                    mask_cache[t] = self.mask_embed(masks[t], num_objects)
                return mask_cache[t]

            for t in range(1, len(frames)):
                ref_ids = [0] if t - 1 == 0 else [0, t - 1]
                refs = [(tokens_of(r)[0], mask_embed_of(r)) for r in ref_ids]
                z_t, p8, p4, grid_hw = tokens_of(t)
                zl_t = self.forward_tokens(z_t, refs)
                logits = self.decode(zl_t, grid_hw, p8, p4, num_objects)
                pred = np.argmax(logits.data, axis=2).astype(np.uint8)
                masks.append(pred)
                # only frame 1 and the most recent frame stay referenced
                for stale in list(token_cache):
                    if stale not in (0, t):
                        del token_cache[stale]
                for stale in list(mask_cache):
                    if stale not in (0, t):
                        del mask_cache[stale]
        return masks


def build_model(cfg, seed=0, prompt_mode="rgb-only", init="random",
                store=None):
    """Construct a foundation model (optionally with the X prompt path).

    ``init='zeros'`` skips random draws entirely; used for parameter
    accounting at large scale.
    """
    from .params import ParamStore
    from .prompter import Prompter

    cfg.validate()
    store = store if store is not None else ParamStore()
    rng = init_rng(seed, 1)
    rgb = PatchEmbed(store, "rgb_embed", "rgb-embed", 3, cfg, rng, init)
    mask = MaskEmbed(store, cfg, rng, init)
    layers = [EncoderLayer(store, i, cfg, rng, init)
              for i in range(cfg.layers)]
    dec = Decoder(store, cfg, rng, init)
    x_embed = None
    prompter = None
    if prompt_mode != "rgb-only":
        x_embed = PatchEmbed(store, "x_embed", "x-embed", 1, cfg, rng, init)
        if prompt_mode in ("concat", "mvp"):
            prompter = Prompter(store, cfg, rng, mode=prompt_mode, init=init)
    return FoundationModel(cfg, store, rgb, mask, layers, dec,
                           x_embed=x_embed, prompter=prompter,
                           prompt_mode=prompt_mode)
