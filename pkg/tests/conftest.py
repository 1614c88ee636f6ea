import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: Monte Carlo checks with many replications')


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)
