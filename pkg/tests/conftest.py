import numpy as np
import pytest

from ctxloco.terrain import PropertyLevel, PropertyLevels, levels_to_params
from ctxloco.translator import MockBackend


@pytest.fixture
def mock_backend():
    return MockBackend()


@pytest.fixture
def medium_terrain():
    return levels_to_params(PropertyLevels.uniform(PropertyLevel.MEDIUM))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
