import numpy as np
import pytest


def random_matrix(rng, n, scale=1.0):
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def make_gauge(seed=0):
    """Callable rescaling left and right vectors by independent random complex factors."""
    rng = np.random.default_rng(seed)

    def gauge(lam, pair):
        r = rng.uniform(0.2, 5.0) * np.exp(2j * np.pi * rng.random())
        l = rng.uniform(0.2, 5.0) * np.exp(2j * np.pi * rng.random())
        return pair.rescaled(r, l)

    return gauge


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
