import numpy as np
import pytest

from gpde import Dataset, Hyperparams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n=6, d=2, c=1, domain_id="dom"):
    X = rng.normal(size=(n, d))
    Y = rng.choice([-1.0, 1.0], size=(n, c))
    return Dataset(X=X, Y=Y, domain_id=domain_id)


def random_hyper(rng):
    return Hyperparams(
        length_scale=float(rng.uniform(0.5, 2.0)),
        signal_std=float(rng.uniform(0.5, 1.5)),
        noise_std=float(rng.uniform(0.05, 0.5)),
    )
