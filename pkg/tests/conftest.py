import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("suite", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def toy_state_spec():
    """Small state-column ensemble: expansion-friendly at tiny Q."""
    from protomdpc.protograph import custom_ensemble

    return custom_ensemble([[1, 3, 3], [2, 1, 1]], [0], 13, name="toy-state")


@pytest.fixture
def toy_reference_spec():
    from protomdpc.protograph import custom_ensemble

    return custom_ensemble([[3, 3]], [], 13, name="toy-ref")


@pytest.fixture
def medium_state_spec():
    """State-column ensemble big enough for decoding exercises."""
    from protomdpc.protograph import custom_ensemble

    return custom_ensemble([[1, 5, 5], [2, 1, 1]], [0], 101, name="toy-state-101")


@pytest.fixture
def medium_reference_spec():
    from protomdpc.protograph import custom_ensemble

    return custom_ensemble([[5, 5]], [], 101, name="toy-ref-101")
