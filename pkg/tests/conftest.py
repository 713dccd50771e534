import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def random_psd(rng, n):
    G = rng.standard_normal((n, n))
    return G.T @ G
