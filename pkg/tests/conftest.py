import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

from emofeats.net import ModelConfig
from emofeats.weights import synth_weights


@pytest.fixture(scope="session")
def small_cfg() -> ModelConfig:
    """2 blocks x 2 layers x 6 channels; fast enough for exhaustive checks."""
    return ModelConfig(n_mfcc=4, channels=6, n_blocks=2, layers_per_block=2, kernel_size=3)


@pytest.fixture(scope="session")
def small_weights(small_cfg):
    return synth_weights(small_cfg, seed=7)


def make_tone(freq_hz: float, duration_s: float, sample_rate: int, amplitude: float = 0.5,
              phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(duration_s * sample_rate)) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq_hz * t + phase)


# acceptance criterion reporting: collected lines are printed in the
# terminal summary so every P-criterion shows one pass/fail line
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
