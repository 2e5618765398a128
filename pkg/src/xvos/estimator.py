"""Scikit-learn style facade over the two-stage training protocol.

``VideoObjectSegmenter`` exposes fit/predict/score plus get_params/set_params
so the segmenter composes with sklearn tooling (clone, grid search) without
depending on sklearn itself. ``X`` is a list of VideoSample sequences; fit
runs stage-1 RGB pretraining, ``adapt`` runs stage-2 multi-modal adaptation
on the frozen result, predict propagates first-frame masks and score reports
mean J&F.
"""

from __future__ import annotations

import inspect
import os
import tempfile

from .bench import score_model
from .config import AdaptConfig, ModelConfig, PretrainConfig
from .errors import ContractError
from .train import adapt as run_adapt
from .train import pretrain as run_pretrain


class VideoObjectSegmenter:
    def __init__(self, dim=64, layers=2, heads=2, ffn_mult=4, max_objects=3,
                 chan4=16, chan8=32, pretrain_steps=2000, adapt_steps=2000,
                 pretrain_lr=1e-3, adapt_lr=1e-3, experts=2, rank=4,
                 prompt_mode="mvp", adapt_mode="maes", seed=0):
        self.dim = dim
        self.layers = layers
        self.heads = heads
        self.ffn_mult = ffn_mult
        self.max_objects = max_objects
        self.chan4 = chan4
        self.chan8 = chan8
        self.pretrain_steps = pretrain_steps
        self.adapt_steps = adapt_steps
        self.pretrain_lr = pretrain_lr
        self.adapt_lr = adapt_lr
        self.experts = experts
        self.rank = rank
        self.prompt_mode = prompt_mode
        self.adapt_mode = adapt_mode
        self.seed = seed

    # -- sklearn plumbing ---------------------------------------------------

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in self._param_names():
                raise ContractError(f"unknown parameter '{name}'")
            setattr(self, name, value)
        return self

    # -- training -----------------------------------------------------------

    def _model_config(self):
        return ModelConfig(dim=self.dim, layers=self.layers,
                           heads=self.heads, ffn_mult=self.ffn_mult,
                           max_objects=self.max_objects, chan4=self.chan4,
                           chan8=self.chan8)

    def fit(self, X, y=None):
        """Stage-1 RGB pretraining on a list of VideoSample sequences."""
        cfg = PretrainConfig(steps=self.pretrain_steps, lr=self.pretrain_lr)
        self._tmp = tempfile.TemporaryDirectory(prefix="xvos-est-")
        self._ckpt = os.path.join(self._tmp.name, "pretrain")
        self.model_, self.history_ = run_pretrain(
            self._model_config(), cfg, list(X), seed=self.seed,
            out=self._ckpt)
        self.stage_ = "pretrain"
        return self

    def adapt(self, X):
        """Stage-2 adaptation on RGB-X sequences (requires a fitted model)."""
        self._require_fitted()
        cfg = AdaptConfig(steps=self.adapt_steps, lr=self.adapt_lr,
                          experts=self.experts, rank=self.rank,
                          prompt_mode=self.prompt_mode,
                          adapt_mode=self.adapt_mode)
        self.model_, self.report_, self.adapt_history_ = run_adapt(
            cfg, self._ckpt, list(X), seed=self.seed)
        self.stage_ = "adapt"
        return self

    # -- inference ----------------------------------------------------------

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise ContractError("segmenter is not fitted; call fit(X) first")

    def _mode(self):
        return "rgb-only" if self.stage_ == "pretrain" else "rgb-x"

    def predict(self, X):
        """Masks for one sample or a list of samples."""
        self._require_fitted()
        single = not isinstance(X, (list, tuple))
        samples = [X] if single else list(X)
        mode = self._mode()
        out = []
        for s in samples:
            xmaps = None if mode == "rgb-only" else s.xmaps
            out.append(self.model_.segment_video(s.frames, xmaps,
                                                 s.masks[0], mode=mode))
        return out[0] if single else out

    def score(self, X, y=None):
        """Mean J&F over the given sequences (frame 1 excluded)."""
        self._require_fitted()
        _, _, _, jf = score_model(self.model_, list(X), self._mode())
        return float(jf)

    def __repr__(self):
        args = ", ".join(f"{k}={getattr(self, k)!r}"
                         for k in self._param_names())
        return f"VideoObjectSegmenter({args})"
