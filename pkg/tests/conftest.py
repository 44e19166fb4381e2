import numpy as np
import pytest

from geotrack.manifolds import SPD, Euclidean


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spd3():
    return SPD(3)


@pytest.fixture
def plane():
    return Euclidean(2)


def random_spd(m, rng, spread=1.0):
    """SPD matrix with log-eigenvalues uniform in ``[-spread, spread]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    lam = np.exp(rng.uniform(-spread, spread, size=m))
    X = (Q * lam) @ Q.T
    return 0.5 * (X + X.T)


def random_sym(m, rng):
    G = rng.standard_normal((m, m))
    return 0.5 * (G + G.T)
