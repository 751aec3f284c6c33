import numpy as np
import pytest

from mlgibbs import make_power, make_quadratic


@pytest.fixture
def quad1():
    """Centered unit quadratic in one dimension."""
    return make_quadratic(1)


@pytest.fixture
def quad3():
    return make_quadratic(3, center=0.5, scale=2.0)


@pytest.fixture
def power1():
    """The weakly convex reference potential used across the suite."""
    return make_power(1, 0.75)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
