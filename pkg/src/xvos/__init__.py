"""Cross-modal (RGB+X) video object segmentation.

A frozen RGB foundation model adapted to RGB+X tasks through a multi-modal
visual prompter and routed low-rank modality experts, with a synthetic RGB-X
data generator, a two-stage training harness and a J/F evaluation suite.
Everything runs on a from-scratch float64 autodiff engine built for
verifiability: every op and the end-to-end model pass central-difference
gradient checks.
"""

from .autograd import Tensor, backward, grad_check, no_grad, ops
from .bench import run_ablation, run_benchmark
from .config import (AblateConfig, AdaptConfig, EvalConfig, ModelConfig,
                     PretrainConfig, RootConfig, SynthConfig, load_config,
                     parse_config)
from .errors import ContractError, NonFiniteError, ShapeError
from .estimator import VideoObjectSegmenter
from .experts import (ExpertBank, adapted_linear, expert_delta,
                      inject_experts, param_report, route)
from .foundation import FoundationModel, build_model
from .losses import bootstrapped_ce_loss, combined_loss, soft_jaccard_loss
from .metrics import metric_f, metric_j, metric_jf
from .params import ParamStore
from .synth import VideoSample, generate_dataset, generate_sequence
from .train import adapt, load_model, pretrain

__version__ = "0.1.0"

__all__ = [
    "Tensor", "backward", "grad_check", "no_grad", "ops",
    "run_ablation", "run_benchmark",
    "AblateConfig", "AdaptConfig", "EvalConfig", "ModelConfig",
    "PretrainConfig", "RootConfig", "SynthConfig", "load_config",
    "parse_config",
    "ContractError", "NonFiniteError", "ShapeError",
    "VideoObjectSegmenter",
    "ExpertBank", "adapted_linear", "expert_delta", "inject_experts",
    "param_report", "route",
    "FoundationModel", "build_model",
    "bootstrapped_ce_loss", "combined_loss", "soft_jaccard_loss",
    "metric_f", "metric_j", "metric_jf",
    "ParamStore",
    "VideoSample", "generate_dataset", "generate_sequence",
    "adapt", "load_model", "pretrain",
]
