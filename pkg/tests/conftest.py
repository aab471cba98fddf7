import sys
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))  # test helpers (shading_oracle)

torch.set_num_threads(1)  # deterministic single-threaded mode for the suite


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_cfg():
    from videorelight.data import GeneratorConfig

    return GeneratorConfig(frames=4, height=16, width=16)


@pytest.fixture
def small_sample(tiny_cfg):
    from videorelight.data.dataset import generate_sample

    return generate_sample(123, 0, tiny_cfg)
