import numpy as np
import pytest

from cfr.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear_data():
    """Noiseless y = 2 x1 + 1 on 200 evenly spaced points."""
    x = np.linspace(-1.0, 1.0, 200)
    return Dataset(x.reshape(-1, 1), 2.0 * x + 1.0, ["x1"])
