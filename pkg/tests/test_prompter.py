"""Multi-modal visual prompter contracts."""

import numpy as np
import pytest
from scipy.special import erf

from xvos.autograd import Tensor, grad_check, ops
from xvos.config import ModelConfig
from xvos.errors import ShapeError
from xvos.params import ParamStore, init_rng
from xvos.prompter import Prompter


def _make(cfg=None, mode="mvp"):
    cfg = cfg or ModelConfig()
    store = ParamStore()
    return Prompter(store, cfg, init_rng(0, 0), mode=mode), store, cfg


def _zero_attention(store):
    for name, t in store.items():
        if name.startswith(("prompter.spatial", "prompter.channel")):
            t.data = np.zeros_like(t.data)


def _selector_fuse(store, d):
    w = np.zeros((2 * d, d))
    w[:d] = np.eye(d)
    store["prompter.fuse.w"].data = w
    store["prompter.fuse.b"].data = np.zeros(d)


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def test_fuse_selector_blocks(rng):
    p, store, cfg = _make()
    d = cfg.dim
    z_rgb = Tensor(rng.standard_normal((6, d)))
    z_x = Tensor(rng.standard_normal((6, d)))

    _selector_fuse(store, d)
    assert np.allclose(p.fuse_tokens(z_rgb, z_x).data, z_rgb.data,
                       atol=1e-12)

    w = np.zeros((2 * d, d))
    w[d:] = np.eye(d)
    store["prompter.fuse.w"].data = w
    assert np.allclose(p.fuse_tokens(z_rgb, z_x).data, z_x.data, atol=1e-12)

    with pytest.raises(ShapeError):
        p.fuse_tokens(z_rgb, Tensor(rng.standard_normal((5, d))))


def test_fuse_matches_matmul_oracle(rng):
    p, store, cfg = _make()
    d = cfg.dim
    z_rgb = rng.standard_normal((2, d))
    z_x = rng.standard_normal((2, d))
    out = p.fuse_tokens(Tensor(z_rgb), Tensor(z_x)).data
    ref = np.concatenate([z_rgb, z_x], axis=1) \
        @ store["prompter.fuse.w"].data + store["prompter.fuse.b"].data
    assert np.allclose(out, ref, atol=1e-12)


def test_spatial_attention_zero_nets_and_shape(rng):
    p, store, cfg = _make()
    _zero_attention(store)
    zf = Tensor(rng.standard_normal((4, 4, cfg.dim)))
    a_s = p.spatial_attention(zf)
    assert a_s.shape == (4, 4, 1)
    assert np.allclose(a_s.data, 0.5, atol=1e-15)


def test_spatial_attention_matches_pool_conv_oracle(rng):
    p, store, cfg = _make()
    kernel = rng.standard_normal((7, 7, 1, 1))
    store["prompter.spatial.avg_conv.w"].data = kernel
    store["prompter.spatial.max_conv.w"].data = kernel * 0.5
    store["prompter.spatial.avg_conv.b"].data = np.array([0.3])
    store["prompter.spatial.max_conv.b"].data = np.array([-0.1])
    zf = rng.standard_normal((4, 4, cfg.dim))
    out = p.spatial_attention(Tensor(zf)).data

    def conv7(plane, k, b):
        padded = np.pad(plane, 3)
        res = np.zeros((4, 4))
        for i in range(4):
            for j in range(4):
                res[i, j] = (padded[i:i + 7, j:j + 7] * k[:, :, 0, 0]).sum() \
                    + b
        return res

    pre = conv7(zf.mean(axis=2), kernel, 0.3) \
        + conv7(zf.max(axis=2), kernel * 0.5, -0.1)
    assert np.allclose(out[:, :, 0], 1 / (1 + np.exp(-pre)), atol=1e-12)


def test_channel_attention_cases(rng):
    p, store, cfg = _make()
    _zero_attention(store)
    zf = Tensor(rng.standard_normal((4, 4, cfg.dim)))
    a_c = p.channel_attention(zf)
    assert a_c.shape == (1, cfg.dim)
    assert np.allclose(a_c.data, 0.5, atol=1e-15)


def test_channel_attention_constant_input_degeneracy(rng):
    p, store, cfg = _make()
    d = cfg.dim
    vec = rng.standard_normal(d)
    zf = np.tile(vec, (4, 4, 1))
    out = p.channel_attention(Tensor(zf)).data

    w1 = store["prompter.channel.mlp.fc1.w"].data
    b1 = store["prompter.channel.mlp.fc1.b"].data
    w2 = store["prompter.channel.mlp.fc2.w"].data
    b2 = store["prompter.channel.mlp.fc2.b"].data
    mlp = _gelu(vec[None] @ w1 + b1) @ w2 + b2
    # avg-pool equals max-pool on constant input, so the branches double
    assert np.allclose(out, 1 / (1 + np.exp(-2 * mlp)), atol=1e-12)


def test_channel_attention_matches_mlp_oracle(rng):
    p, store, cfg = _make()
    zf = rng.standard_normal((4, 4, cfg.dim))
    out = p.channel_attention(Tensor(zf)).data
    w1 = store["prompter.channel.mlp.fc1.w"].data
    b1 = store["prompter.channel.mlp.fc1.b"].data
    w2 = store["prompter.channel.mlp.fc2.w"].data
    b2 = store["prompter.channel.mlp.fc2.b"].data

    def mlp(v):
        return _gelu(v[None] @ w1 + b1) @ w2 + b2

    pre = mlp(zf.mean(axis=(0, 1))) + mlp(zf.max(axis=(0, 1)))
    assert np.allclose(out, 1 / (1 + np.exp(-pre)), atol=1e-12)


def test_prompt_quarter_scale_and_range_bound(rng):
    p, store, cfg = _make()
    _zero_attention(store)
    _selector_fuse(store, cfg.dim)
    rgb16 = rng.standard_normal((4, 4, cfg.dim))
    x16 = rng.standard_normal((4, 4, cfg.dim))
    z0 = p.prompt_grid(Tensor(rgb16), Tensor(x16)).data
    assert np.allclose(z0, 0.25 * rgb16.reshape(16, cfg.dim), atol=1e-12)

    p2, store2, _ = _make()
    z_fuse = np.concatenate([rgb16.reshape(16, -1), x16.reshape(16, -1)],
                            axis=1) @ store2["prompter.fuse.w"].data \
        + store2["prompter.fuse.b"].data
    z0b = p2.prompt_grid(Tensor(rgb16), Tensor(x16)).data
    assert (np.abs(z0b) <= np.abs(z_fuse) + 1e-12).all()


def test_attention_maps_in_open_unit_interval(rng):
    p, _, cfg = _make()
    zf = Tensor(10.0 * rng.standard_normal((4, 4, cfg.dim)))
    a_s = p.spatial_attention(zf).data
    a_c = p.channel_attention(zf).data
    for a in (a_s, a_c):
        assert (a > 0.0).all() and (a < 1.0).all()


def test_broadcast_equals_triple_loop_oracle(rng):
    p, store, cfg = _make()
    d = cfg.dim
    rgb16 = rng.standard_normal((2, 2, d))
    x16 = rng.standard_normal((2, 2, d))
    z0 = p.prompt_grid(Tensor(rgb16), Tensor(x16)).data

    zf = (np.concatenate([rgb16.reshape(4, d), x16.reshape(4, d)], axis=1)
          @ store["prompter.fuse.w"].data + store["prompter.fuse.b"].data)
    a_s = p.spatial_attention(Tensor(zf.reshape(2, 2, d))).data
    a_c = p.channel_attention(Tensor(zf.reshape(2, 2, d))).data
    ref = np.zeros((2, 2, d))
    for i in range(2):
        for j in range(2):
            for c in range(d):
                ref[i, j, c] = a_s[i, j, 0] * a_c[0, c] \
                    * zf.reshape(2, 2, d)[i, j, c]
    assert np.abs(z0 - ref.reshape(4, d)).max() <= 1e-12


def test_multiscale_zero_adapter_identity_and_oracle(rng):
    p, store, cfg = _make()
    r4 = rng.standard_normal((8, 8, cfg.chan4))
    x4 = rng.standard_normal((8, 8, cfg.chan4))
    r8 = rng.standard_normal((4, 4, cfg.chan8))
    x8 = rng.standard_normal((4, 4, cfg.chan8))
    p4, p8 = p.multiscale(Tensor(r4), Tensor(x4), Tensor(r8), Tensor(x8))
    assert np.array_equal(p4.data, r4)  # zero-init residual adapters
    assert np.array_equal(p8.data, r8)
    assert p4.shape == r4.shape and p8.shape == r8.shape

    w = rng.standard_normal((2 * cfg.chan4, cfg.chan4))
    b = rng.standard_normal(cfg.chan4)
    store["prompter.adapter4.w"].data = w
    store["prompter.adapter4.b"].data = b
    p4b, _ = p.multiscale(Tensor(r4), Tensor(x4), Tensor(r8), Tensor(x8))
    ref = r4 + (np.concatenate([r4, x4], axis=2).reshape(64, -1) @ w + b) \
        .reshape(8, 8, cfg.chan4)
    assert np.allclose(p4b.data, ref, atol=1e-12)
    with pytest.raises(ShapeError):
        p.multiscale(Tensor(r4), Tensor(x4[:4]), Tensor(r8), Tensor(x8))


def test_prompter_gradient_check(rng):
    cfg = ModelConfig(dim=16, chan4=4, chan8=8)
    p, store, _ = _make(cfg)
    rgb16 = Tensor(rng.standard_normal((2, 2, 16)))
    x16 = Tensor(rng.standard_normal((2, 2, 16)))

    def full(t):
        return ops.sum_(p.prompt_grid(t, x16))

    assert grad_check(full, rgb16, eps=1e-5) < 1e-4
    for name, tensor in store.items():
        if tensor.size > 40:
            continue
        err = grad_check(lambda _: ops.sum_(p.prompt_grid(rgb16, x16)),
                         tensor, eps=1e-5)
        assert err < 1e-4, f"{name}: {err}"
