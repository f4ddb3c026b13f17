import numpy as np
import pytest

from fcy.verification.checks import random_hermitian


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


@pytest.fixture
def hermitian(rng):
    def make(n, low=0.1, high=10.0):
        return random_hermitian(rng, n, low, high)

    return make
