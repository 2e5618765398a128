"""Configuration dataclasses and strict JSON parsing.

One JSON document configures everything; top-level sections map to the
dataclasses below. Unknown keys anywhere are rejected so typos fail loudly
instead of silently running defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ContractError

RGB_CORRUPTIONS = ("none", "low-contrast", "darkness", "clutter")
X_SIGNALS = ("thermal", "depth", "event")
PROMPT_MODES = ("rgb-only", "x-only", "concat", "mvp")
ADAPT_MODES = ("frozen", "full-ft", "adapter", "lora", "maes")


@dataclass
class ModelConfig:
    """Foundation-model shape. Toy defaults; the full-scale shape is dim=768,
    layers=10, heads=12, chan4=192, chan8=384."""
    dim: int = 64
    layers: int = 2
    heads: int = 2
    ffn_mult: int = 4
    patch_stride: int = 16
    max_objects: int = 3
    chan4: int = 16
    chan8: int = 32
    ln_eps: float = 1e-5

    def validate(self):
        if self.dim % self.heads != 0:
            raise ContractError(f"dim {self.dim} not divisible by heads "
                                f"{self.heads}")
        if self.patch_stride != 16:
            raise ContractError("patch_stride must be 16 (4x/2x/2x stages)")
        if self.layers < 1:
            raise ContractError("layers must be >= 1")
        if min(self.dim, self.heads, self.ffn_mult, self.max_objects,
               self.chan4, self.chan8) < 1:
            raise ContractError("model dims must be positive")


@dataclass
class SynthConfig:
    """Synthetic RGB-X video generator settings; seed fully determines the
    output."""
    num_sequences: int = 40
    frames: int = 8
    height: int = 64
    width: int = 64
    min_objects: int = 1
    max_objects: int = 2
    min_size: int = 10
    max_size: int = 22
    min_speed: float = 1.0
    max_speed: float = 3.0
    rgb_corruption: str = "none"
    severity: float = 0.0
    x_signal: str = "thermal"
    seed: int = 0

    def validate(self):
        if self.rgb_corruption not in RGB_CORRUPTIONS:
            raise ContractError(f"rgb_corruption '{self.rgb_corruption}' not "
                                f"in {RGB_CORRUPTIONS}")
        if self.x_signal not in X_SIGNALS:
            raise ContractError(f"x_signal '{self.x_signal}' not in "
                                f"{X_SIGNALS}")
        if not 0.0 <= self.severity <= 1.0:
            raise ContractError("severity must lie in [0, 1]")
        if self.height % 16 or self.width % 16:
            raise ContractError("frame dims must be divisible by 16")
        if self.max_size >= min(self.height, self.width):
            raise ContractError(f"object size {self.max_size} does not fit a "
                                f"{self.height}x{self.width} frame")
        if not 1 <= self.min_objects <= self.max_objects:
            raise ContractError("need 1 <= min_objects <= max_objects")
        if self.frames < 1 or self.num_sequences < 1:
            raise ContractError("frames and num_sequences must be >= 1")


@dataclass
class PretrainConfig:
    steps: int = 2000
    lr: float = 2e-4
    clip_len: int = 3
    keep_ratio_floor: float = 0.15
    keep_warmup_frac: float = 0.1
    log_every: int = 200
    data_dir: str | None = None
    seed: int = 0


@dataclass
class AdaptConfig:
    steps: int = 2000
    lr: float = 1e-4
    clip_len: int = 3
    keep_ratio_floor: float = 0.15
    keep_warmup_frac: float = 0.1
    log_every: int = 200
    data_dir: str | None = None
    init_checkpoint: str | None = None
    experts: int = 2
    rank: int = 4
    prompt_mode: str = "mvp"
    adapt_mode: str = "maes"
    seed: int = 0

    def validate(self):
        if self.prompt_mode not in PROMPT_MODES:
            raise ContractError(f"prompt_mode '{self.prompt_mode}' not in "
                                f"{PROMPT_MODES}")
        if self.adapt_mode not in ADAPT_MODES:
            raise ContractError(f"adapt_mode '{self.adapt_mode}' not in "
                                f"{ADAPT_MODES}")
        if self.experts < 0 or self.rank < 1:
            raise ContractError("need experts >= 0 and rank >= 1")


@dataclass
class EvalConfig:
    checkpoint: str | None = None
    dataset_dir: str | None = None
    mode: str = "rgb-x"
    boundary_tol: int | None = None
    seed: int = 0

    def validate(self):
        if self.mode not in ("rgb-only", "rgb-x"):
            raise ContractError(f"eval mode '{self.mode}' must be rgb-only "
                                "or rgb-x")


@dataclass
class AblateConfig:
    """Variant sweep mirroring the framework / adaptation / expert-count
    ablations, trained under one shared budget and seed."""
    variants: list = field(default_factory=lambda: [
        "rgb-only+frozen", "mvp+frozen", "concat+maes2", "mvp+maes2",
        "mvp+full-ft", "mvp+adapter", "mvp+lora",
        "mvp+maes1", "mvp+maes3", "mvp+maes4", "mvp+maes5",
    ])
    pretrain_steps: int = 300
    adapt_steps: int = 300
    pretrain_lr: float = 1e-3
    adapt_lr: float = 1e-3
    train_sequences: int = 8
    test_sequences: int = 2
    rgb_corruption: str = "low-contrast"
    severity: float = 0.9
    x_signal: str = "thermal"
    rank: int = 4
    seed: int = 0


@dataclass
class RootConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    ablate: AblateConfig = field(default_factory=AblateConfig)

    def validate(self):
        self.model.validate()
        self.synth.validate()
        self.adapt.validate()
        self.eval.validate()


def _build_section(cls, data, path):
    if not isinstance(data, dict):
        raise ContractError(f"config section '{path}' must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ContractError(f"unknown config key(s) {sorted(unknown)} in "
                            f"'{path}'")
    return cls(**data)


def parse_config(doc):
    """Build a validated RootConfig from a parsed JSON object."""
    if not isinstance(doc, dict):
        raise ContractError("config must be a JSON object")
    sections = {f.name: f.type for f in dataclasses.fields(RootConfig)}
    classes = {"model": ModelConfig, "synth": SynthConfig,
               "pretrain": PretrainConfig, "adapt": AdaptConfig,
               "eval": EvalConfig, "ablate": AblateConfig}
    unknown = set(doc) - set(sections)
    if unknown:
        raise ContractError(f"unknown config section(s) {sorted(unknown)}")
    kwargs = {}
    for name, cls in classes.items():
        if name in doc:
            kwargs[name] = _build_section(cls, doc[name], name)
    cfg = RootConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(doc)


def config_hash(cfg, seed=None):
    """Stable sha256 over the normalized config (plus an optional seed)."""
    doc = dataclasses.asdict(cfg)
    if seed is not None:
        doc["_seed"] = int(seed)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
