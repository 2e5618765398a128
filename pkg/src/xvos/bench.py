"""Benchmark runner, ablation sweep and report serialization.

Reports carry per-sequence and mean J/F/J&F plus parameter accounting. The
JSON report includes wall-clock runtime and the config hash; the CSV mirror
deliberately excludes runtime so identical reruns produce identical bytes.

CSV columns (fixed): variant,sequence,trainable_params,adapt_params,J,F,JF
with one row per variant/sequence and a MEAN row per variant. Floats use 6
decimals. Rows follow the variant order of the run and sequence-name order.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field

import numpy as np

from .config import (ADAPT_MODES, PROMPT_MODES, AdaptConfig, PretrainConfig,
                     SynthConfig)
from .errors import ContractError
from .experts import param_report
from .metrics import evaluate_sequence, metric_jf
from .pnm import load_dataset
from .synth import generate_dataset
from .train import adapt, load_model, pretrain


@dataclass
class SequenceScore:
    name: str
    j: float
    f: float
    jf: float


@dataclass
class VariantResult:
    name: str
    trainable_params: int
    adapt_params: int
    j: float
    f: float
    jf: float
    per_sequence: list = field(default_factory=list)
    param_groups: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    config_hash: str
    variants: list
    runtime_s: float = 0.0

    def to_dict(self):
        return {
            "config_hash": self.config_hash,
            "runtime_s": self.runtime_s,
            "variants": [{
                "name": v.name,
                "trainable_params": v.trainable_params,
                "adapt_params": v.adapt_params,
                "param_groups": v.param_groups,
                "J": v.j, "F": v.f, "JF": v.jf,
                "per_sequence": [{"name": s.name, "J": s.j, "F": s.f,
                                  "JF": s.jf} for s in v.per_sequence],
            } for v in self.variants],
        }

    def csv_lines(self):
        lines = ["variant,sequence,trainable_params,adapt_params,J,F,JF"]
        for v in self.variants:
            for s in v.per_sequence:
                lines.append(f"{v.name},{s.name},{v.trainable_params},"
                             f"{v.adapt_params},{s.j:.6f},{s.f:.6f},"
                             f"{s.jf:.6f}")
            lines.append(f"{v.name},MEAN,{v.trainable_params},"
                         f"{v.adapt_params},{v.j:.6f},{v.f:.6f},{v.jf:.6f}")
        return lines


def write_report(out_dir, report):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "report.csv"), "w") as fh:
        fh.write("\n".join(report.csv_lines()) + "\n")


def score_model(model, samples, mode, tol=None, segment_fn=None):
    """Segment every sample and aggregate metrics (frame 1 excluded).

    ``segment_fn(model, sample, mode) -> masks`` overrides the segmentation
    path (test hook)."""
    rows = []
    for i, sample in enumerate(samples):
        name = sample.name or f"seq_{i:04d}"
        if segment_fn is not None:
            preds = segment_fn(model, sample, mode)
        else:
            xmaps = None if mode == "rgb-only" else sample.xmaps
            preds = model.segment_video(sample.frames, xmaps,
                                        sample.masks[0], mode=mode)
        j, f, jf = evaluate_sequence(preds, sample.masks,
                                     sample.num_objects, tol)
        rows.append(SequenceScore(name, j, f, jf))
    j = float(np.mean([r.j for r in rows])) if rows else 0.0
    f = float(np.mean([r.f for r in rows])) if rows else 0.0
    return rows, j, f, metric_jf(j, f)


def run_benchmark(checkpoint_path, dataset_dir, mode="rgb-x", out=None,
                  tol=None, cfg_hash="", segment_fn=None):
    """Evaluate one checkpoint over an on-disk dataset."""
    t0 = time.time()
    model, _ = load_model(checkpoint_path)
    samples = load_dataset(dataset_dir)
    if mode == "rgb-x" and model.prompt_mode == "rgb-only":
        mode = "rgb-only"
    rows, j, f, jf = score_model(model, samples, mode, tol, segment_fn)
    rep = param_report(model.store)
    variant = VariantResult(mode, rep.trainable, rep.adapt_params, j, f, jf,
                            rows, dict(rep.by_group))
    report = EvalReport(cfg_hash, [variant], runtime_s=time.time() - t0)
    if out:
        write_report(out, report)
    return report


_MAES_RE = re.compile(r"^maes(\d+)?$")


def parse_variant(name, default_k=2):
    """'prompt+adapt' -> (prompt_mode, adapt_mode, expert count)."""
    parts = name.split("+")
    if len(parts) != 2:
        raise ContractError(f"variant '{name}' must look like "
                            "'<prompt>+<adaptation>'")
    prompt, adapt_name = parts
    if prompt not in PROMPT_MODES:
        raise ContractError(f"unknown prompt variant '{prompt}' in '{name}'")
    m = _MAES_RE.match(adapt_name)
    if m:
        k = int(m.group(1)) if m.group(1) else default_k
        return prompt, "maes", k
    if adapt_name not in ADAPT_MODES:
        raise ContractError(f"unknown adaptation variant '{adapt_name}' in "
                            f"'{name}'")
    return prompt, adapt_name, 0


def _role_seed(seed, tag):
    return int(np.random.SeedSequence([int(seed), tag]).generate_state(1)[0]
               & 0x7FFFFFFF)


def ablation_datasets(synth_template, ab_cfg, seed):
    """Clean pretraining data plus corrupted adaptation/test splits, all
    derived deterministically from one seed."""
    base = {k: getattr(synth_template, k)
            for k in ("frames", "height", "width", "min_objects",
                      "max_objects", "min_size", "max_size", "min_speed",
                      "max_speed")}
    pre = SynthConfig(num_sequences=ab_cfg.train_sequences,
                      rgb_corruption="none", severity=0.0,
                      x_signal=ab_cfg.x_signal,
                      seed=_role_seed(seed, 1), **base)
    tr = SynthConfig(num_sequences=ab_cfg.train_sequences,
                     rgb_corruption=ab_cfg.rgb_corruption,
                     severity=ab_cfg.severity, x_signal=ab_cfg.x_signal,
                     seed=_role_seed(seed, 2), **base)
    te = SynthConfig(num_sequences=ab_cfg.test_sequences,
                     rgb_corruption=ab_cfg.rgb_corruption,
                     severity=ab_cfg.severity, x_signal=ab_cfg.x_signal,
                     seed=_role_seed(seed, 3), **base)
    return (generate_dataset(pre), generate_dataset(tr),
            generate_dataset(te))


def run_ablation(model_cfg, synth_template, ab_cfg, seed=0, out=None,
                 cfg_hash="", workdir=None, log=False):
    """Train every requested variant under one budget/seed and tabulate.

    All variants share a single pretrained foundation checkpoint (identical
    budget and seed), mirroring how the framework / adaptation-mechanism /
    expert-count ablations are structured.
    """
    t0 = time.time()
    for name in ab_cfg.variants:
        parse_variant(name)
    pre_data, adapt_data, test_data = ablation_datasets(synth_template,
                                                        ab_cfg, seed)
    import tempfile
    own_tmp = workdir is None
    workdir = workdir or tempfile.mkdtemp(prefix="xvos-ablate-")
    ckpt = os.path.join(workdir, "pretrain-ckpt")
    pcfg = PretrainConfig(steps=ab_cfg.pretrain_steps, lr=ab_cfg.pretrain_lr)
    pretrain(model_cfg, pcfg, pre_data, seed=seed, out=ckpt, log=log)

    variants = []
    for name in ab_cfg.variants:
        prompt, adapt_mode, k = parse_variant(name)
        acfg = AdaptConfig(steps=ab_cfg.adapt_steps, lr=ab_cfg.adapt_lr,
                           experts=k, rank=ab_cfg.rank, prompt_mode=prompt,
                           adapt_mode=adapt_mode)
        model, rep, _ = adapt(acfg, ckpt, adapt_data, seed=seed)
        mode = "rgb-only" if prompt == "rgb-only" else "rgb-x"
        rows, j, f, jf = score_model(model, test_data, mode)
        variants.append(VariantResult(name, rep.trainable, rep.adapt_params,
                                      j, f, jf, rows, dict(rep.by_group)))
        if log:
            print(f"  {name:<18} JF={jf:.3f} adapt_params={rep.adapt_params}")
    report = EvalReport(cfg_hash, variants, runtime_s=time.time() - t0)
    if out:
        write_report(out, report)
    if own_tmp:
        import shutil
        shutil.rmtree(workdir, ignore_errors=True)
    return report
