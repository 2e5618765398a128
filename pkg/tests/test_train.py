"""Two-stage training protocol: loss descent, determinism, freeze contract."""

import numpy as np
import pytest

from xvos.checkpoint import load_checkpoint, param_bytes, save_checkpoint
from xvos.config import AdaptConfig, ModelConfig, PretrainConfig, SynthConfig
from xvos.errors import ContractError
from xvos.metrics import metric_j
from xvos.params import ADAPT_FROZEN_GROUPS
from xvos.synth import generate_dataset
from xvos.train import adapt, load_model, pretrain


@pytest.fixture(scope="module")
def small_data():
    return generate_dataset(SynthConfig(num_sequences=4, frames=5, seed=50))


@pytest.fixture(scope="module")
def lc_data():
    return generate_dataset(SynthConfig(num_sequences=4, frames=5, seed=51,
                                        rgb_corruption="low-contrast",
                                        severity=0.9))


@pytest.fixture(scope="module")
def pre_ckpt(tmp_path_factory, small_data):
    out = str(tmp_path_factory.mktemp("pre") / "ckpt")
    model, history = pretrain(ModelConfig(), PretrainConfig(steps=200,
                                                            lr=1e-3),
                              small_data, seed=1, out=out)
    return {"model": model, "history": history, "ckpt": out}


def test_pretrain_loss_decreases(pre_ckpt):
    history = pre_ckpt["history"]
    assert len(history) == 200
    first = history[0][1]
    late = np.mean([loss for _, loss in history[-20:]])
    assert late < first


def test_pretrain_seed_determinism(small_data):
    cfg = PretrainConfig(steps=10, lr=1e-3)
    _, h1 = pretrain(ModelConfig(), cfg, small_data, seed=9)
    _, h2 = pretrain(ModelConfig(), cfg, small_data, seed=9)
    assert h1[9] == h2[9]
    assert all(a == b for a, b in zip(h1, h2))


def test_checkpoint_roundtrip_forward_bit_identical(pre_ckpt, small_data,
                                                    tmp_path):
    model1, _ = load_model(pre_ckpt["ckpt"])
    sample = small_data[0]
    out1 = model1.segment_video(sample.frames, None, sample.masks[0],
                                mode="rgb-only")
    second = str(tmp_path / "second")
    save_checkpoint(second, model1.store, meta={"model": ModelConfig().__dict__,
                                                "stage": "pretrain",
                                                "prompt_mode": "rgb-only",
                                                "adapt_mode": None,
                                                "experts": 0, "rank": 0})
    model2, _ = load_model(second)
    out2 = model2.segment_video(sample.frames, None, sample.masks[0],
                                mode="rgb-only")
    for a, b in zip(out1, out2):
        assert np.array_equal(a, b)


def test_adapt_requires_checkpoint(lc_data):
    with pytest.raises(ContractError):
        adapt(AdaptConfig(steps=1), None, lc_data)
    with pytest.raises(ContractError):
        adapt(AdaptConfig(steps=1), "/nonexistent/ckpt", lc_data)


def test_adapt_freeze_contract_and_loss(pre_ckpt, lc_data, tmp_path):
    out = str(tmp_path / "adapted")
    acfg = AdaptConfig(steps=200, lr=1e-3, experts=2, rank=4,
                       prompt_mode="mvp", adapt_mode="maes")
    model, report, history = adapt(acfg, pre_ckpt["ckpt"], lc_data, seed=2,
                                   out=out)

    # frozen groups byte-identical to the pretrain checkpoint
    _, pre_entries = load_checkpoint(pre_ckpt["ckpt"])
    frozen_names = [n for n, rec in pre_entries.items()
                    if rec["group"] in ADAPT_FROZEN_GROUPS]
    assert frozen_names
    for name in frozen_names:
        assert param_bytes(out, name) == param_bytes(pre_ckpt["ckpt"], name)

    # trainable groups are exactly the adaptation surface
    for name, _ in model.store.trainable_items():
        assert model.store.group_of(name) in ("x-embed", "prompter",
                                              "experts")
    assert report.adapt_ratio < 0.10
    late = np.mean([loss for _, loss in history[-20:]])
    assert late < history[0][1]


def test_adapted_checkpoint_reload_matches(pre_ckpt, lc_data, tmp_path):
    out = str(tmp_path / "adapted")
    acfg = AdaptConfig(steps=20, lr=1e-3, experts=2, rank=4,
                       prompt_mode="mvp", adapt_mode="maes")
    model, _, _ = adapt(acfg, pre_ckpt["ckpt"], lc_data, seed=3, out=out)
    reloaded, meta = load_model(out)
    assert meta["stage"] == "adapt"
    sample = lc_data[0]
    a = model.segment_video(sample.frames, sample.xmaps, sample.masks[0])
    # reload passes through f32; rerun the original model from its own save
    b = reloaded.segment_video(sample.frames, sample.xmaps, sample.masks[0])
    for ma, mb in zip(a[1:], b[1:]):
        assert (ma == mb).mean() > 0.99


def test_trained_model_tracks_translating_object(trained_toy, easy_data):
    model = trained_toy["model"]
    js = []
    for sample in easy_data[:3]:
        preds = model.segment_video(sample.frames, None, sample.masks[0],
                                    mode="rgb-only")
        for t in range(1, len(preds)):
            js.append(metric_j(preds[t], sample.masks[t], 1))
    assert min(js) > 0.5


def test_ablation_adapt_modes_smoke(pre_ckpt, lc_data):
    for mode, prompt in [("frozen", "mvp"), ("frozen", "rgb-only"),
                         ("full-ft", "concat"), ("adapter", "mvp"),
                         ("lora", "x-only"), ("maes", "rgb-only")]:
        acfg = AdaptConfig(steps=3, lr=1e-3, experts=2, rank=2,
                           prompt_mode=prompt, adapt_mode=mode)
        model, report, history = adapt(acfg, pre_ckpt["ckpt"], lc_data,
                                       seed=4)
        if mode == "full-ft":
            assert report.trainable == report.total
        if mode == "frozen" and prompt == "rgb-only":
            # nothing trainable: the loop is a no-op
            assert history == [] and report.trainable == 0
