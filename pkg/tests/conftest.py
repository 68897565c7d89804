import numpy as np
import pytest

from esbandit.bandit import LinearBanditInstance, symmetric_instance, validate_instance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sym():
    return symmetric_instance()


def make_instance(actions, mu=None, cov=None, noise_var=1.0):
    actions = np.asarray(actions, dtype=float)
    d = actions.shape[1]
    mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=float)
    cov = np.eye(d) if cov is None else np.asarray(cov, dtype=float)
    return validate_instance(LinearBanditInstance(actions, mu, cov, noise_var))


def random_pd(d, rng):
    B = rng.standard_normal((d, d))
    return B @ B.T / d + 0.3 * np.eye(d)
