"""Multi-modal visual prompter.

Fuses stride-16 RGB and X tokens (concat + linear 2D->D), gates the fused
tokens with spatial-modal attention, and produces residual multi-scale
prompts for the mask decoder.

Reading of the attention equations: the spatial branch pools over channels
(two independent 7x7 single-channel convs on the avg- and max-pooled maps),
the channel branch pools over space (one shared two-layer MLP with hidden
width D/16 on the avg- and max-pooled vectors). Both end in a sigmoid, so the
attention maps live strictly inside (0, 1). The prompt is purely
multiplicative: z0 = (A_s x A_c) * z_fuse, realized as an outer product so no
tensor broadcasting is needed.
"""

from __future__ import annotations

import numpy as np

from .autograd import ops
from .errors import ShapeError

# pre-sigmoid bias for both attention branches; their sum starts at ~2.2, so
# freshly built prompters pass ~0.9 * z_fuse instead of crushing tokens by 4x
ATTN_BIAS = 1.1


class Prompter:
    """Parameters and forward paths for the prompt embedding.

    ``mode='concat'`` registers only the fusion linear and the multi-scale
    adapters (the plain-concatenation ablation); ``mode='mvp'`` adds the
    spatial and channel attention networks.
    """

    def __init__(self, store, cfg, rng, mode="mvp", init="random"):
        d, c4, c8 = cfg.dim, cfg.chan4, cfg.chan8
        self.dim = d
        self.mode = mode
        self.hidden = max(1, d // 16)

        def reg(name, shape, fn):
            data = np.zeros(shape) if init == "zeros" else fn()
            return store.register(f"prompter.{name}", data, "prompter")

        # RGB-selector block plus faint noise on the X block keeps a freshly
        # adapted model at the pretrained operating point
        def fuse_init():
            w = np.zeros((2 * d, d))
            w[:d] = np.eye(d)
            w[d:] = rng.normal(0.0, 1e-3, size=(d, d))
            return w

        self.fuse_w = reg("fuse.w", (2 * d, d), fuse_init)
        self.fuse_b = reg("fuse.b", (d,), lambda: np.zeros(d))

        if mode == "mvp":
            def sconv_init():
                return rng.normal(0.0, 0.02, size=(7, 7, 1, 1))

            self.sconv_avg_w = reg("spatial.avg_conv.w", (7, 7, 1, 1),
                                   sconv_init)
            self.sconv_avg_b = reg("spatial.avg_conv.b", (1,),
                                   lambda: np.full(1, ATTN_BIAS))
            self.sconv_max_w = reg("spatial.max_conv.w", (7, 7, 1, 1),
                                   sconv_init)
            self.sconv_max_b = reg("spatial.max_conv.b", (1,),
                                   lambda: np.full(1, ATTN_BIAS))
            h = self.hidden
            self.mlp_w1 = reg("channel.mlp.fc1.w", (d, h),
                              lambda: rng.normal(0.0, 0.02, size=(d, h)))
            self.mlp_b1 = reg("channel.mlp.fc1.b", (h,), lambda: np.zeros(h))
            self.mlp_w2 = reg("channel.mlp.fc2.w", (h, d),
                              lambda: rng.normal(0.0, 0.02, size=(h, d)))
            self.mlp_b2 = reg("channel.mlp.fc2.b", (d,),
                              lambda: np.full(d, ATTN_BIAS))

        # zero-init residual adapters: p_s = z_rgb_s exactly at start
        self.adapt4_w = reg("adapter4.w", (2 * c4, c4),
                            lambda: np.zeros((2 * c4, c4)))
        self.adapt4_b = reg("adapter4.b", (c4,), lambda: np.zeros(c4))
        self.adapt8_w = reg("adapter8.w", (2 * c8, c8),
                            lambda: np.zeros((2 * c8, c8)))
        self.adapt8_b = reg("adapter8.b", (c8,), lambda: np.zeros(c8))

    # -- stride-16 prompt --------------------------------------------------

    def fuse_tokens(self, z_rgb, z_x):
        if z_rgb.shape != z_x.shape:
            raise ShapeError("fuse_16x", f"token shapes {z_rgb.shape} and "
                                         f"{z_x.shape} differ")
        cat = ops.concat([z_rgb, z_x], axis=1)
        return ops.linear(cat, self.fuse_w, self.fuse_b)

    def spatial_attention(self, zf_grid):
        avg = ops.avg_pool_channel(zf_grid)
        mx = ops.max_pool_channel(zf_grid)
        a = ops.conv2d(avg, self.sconv_avg_w, self.sconv_avg_b, padding=3)
        m = ops.conv2d(mx, self.sconv_max_w, self.sconv_max_b, padding=3)
        return ops.sigmoid(ops.add(a, m))

    def _mlp(self, vec):
        h = ops.gelu(ops.linear(vec, self.mlp_w1, self.mlp_b1))
        return ops.linear(h, self.mlp_w2, self.mlp_b2)

    def channel_attention(self, zf_grid):
        avg = ops.avg_pool_spatial(zf_grid)
        mx = ops.max_pool_spatial(zf_grid)
        return ops.sigmoid(ops.add(self._mlp(avg), self._mlp(mx)))

    def prompt_grid(self, rgb16, x16):
        """Stride-16 prompt tokens for one frame's token grids."""
        h, w, d = rgb16.shape
        zf = self.fuse_tokens(ops.reshape(rgb16, (h * w, d)),
                              ops.reshape(x16, (h * w, d)))
        if self.mode == "concat":
            return zf
        zf_grid = ops.reshape(zf, (h, w, d))
        a_s = self.spatial_attention(zf_grid)
        a_c = self.channel_attention(zf_grid)
        a_sc = ops.matmul(ops.reshape(a_s, (h * w, 1)), a_c)
        return ops.mul(a_sc, zf)

    # -- multi-scale decoder prompts ----------------------------------------

    def _adapt(self, z_rgb, z_x, w, b):
        if z_rgb.shape != z_x.shape:
            raise ShapeError("multiscale_prompts", f"grid shapes "
                                                   f"{z_rgb.shape} and "
                                                   f"{z_x.shape} differ")
        h, wd, c = z_rgb.shape
        cat = ops.reshape(ops.concat([z_rgb, z_x], axis=2), (h * wd, 2 * c))
        delta = ops.reshape(ops.linear(cat, w, b), (h, wd, c))
        return ops.add(z_rgb, delta)

    def multiscale(self, rgb4, x4, rgb8, x8):
        p4 = self._adapt(rgb4, x4, self.adapt4_w, self.adapt4_b)
        p8 = self._adapt(rgb8, x8, self.adapt8_w, self.adapt8_b)
        return p4, p8
