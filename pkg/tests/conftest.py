import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_simplex(rng, n, floor=0.0, size=None):
    """Uniform Dirichlet draws squeezed away from the boundary by `floor`."""
    w = rng.dirichlet(np.ones(n), size=size)
    return w * (1.0 - n * floor) + floor
