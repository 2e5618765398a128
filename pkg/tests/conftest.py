import numpy as np
import pytest

from xvos.config import ModelConfig, PretrainConfig, SynthConfig
from xvos.synth import generate_dataset
from xvos.train import pretrain


@pytest.fixture(scope="session")
def toy_model_cfg():
    return ModelConfig()


@pytest.fixture(scope="session")
def easy_data():
    """Eight clean single-object sequences, shared across training tests."""
    cfg = SynthConfig(num_sequences=8, frames=6, min_objects=1,
                      max_objects=1, seed=77)
    return generate_dataset(cfg)


@pytest.fixture(scope="session")
def trained_toy(tmp_path_factory, toy_model_cfg, easy_data):
    """A modestly pretrained toy model + checkpoint dir (single-object,
    600 steps). Enough quality to track a translating shape."""
    out = str(tmp_path_factory.mktemp("ckpt") / "pretrain")
    model, history = pretrain(toy_model_cfg,
                              PretrainConfig(steps=600, lr=1e-3),
                              easy_data, seed=5, out=out)
    return {"model": model, "ckpt": out, "history": history}


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance criterion lines into the terminal summary."""
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod else None
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
