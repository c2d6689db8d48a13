import numpy as np
import pytest

from kpi_lab.spectral import Grid


@pytest.fixture(scope="session")
def grid():
    """Production x-resolution with enough y-modes for |a| <= 0.5."""
    return Grid(1024, 80.0, 64)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(512, 80.0, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
