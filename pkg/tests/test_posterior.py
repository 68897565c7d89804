import math

import numpy as np
import pytest

from esbandit.bandit import random_instance, symmetric_instance
from esbandit.posterior import GaussianBelief, prior_belief, sample_belief, update_belief, update_belief_direct

from conftest import make_instance, random_pd


def test_prior_belief_identity(sym):
    b = prior_belief(sym)
    np.testing.assert_array_equal(b.mean, np.zeros(2))
    np.testing.assert_array_equal(b.cov, np.eye(2))
    np.testing.assert_array_equal(b.chol(), np.eye(2))
    assert b.t == 0


@pytest.mark.parametrize("update", [update_belief, update_belief_direct])
def test_scalar_hand_case(update):
    b = GaussianBelief(np.array([0.0]), np.array([[1.0]]))
    nxt = update(b, np.array([1.0]), 2.0, 1.0)
    assert nxt.cov[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert nxt.mean[0] == pytest.approx(1.0, abs=1e-15)
    assert nxt.t == 1


@pytest.mark.parametrize("update", [update_belief, update_belief_direct])
def test_zero_action_leaves_belief(update, rng):
    cov = random_pd(3, rng)
    b = GaussianBelief(rng.standard_normal(3), cov)
    nxt = update(b, np.zeros(3), 5.0, 0.7)
    np.testing.assert_allclose(nxt.mean, b.mean, atol=1e-12)
    np.testing.assert_allclose(nxt.cov, b.cov, atol=1e-12)
    assert nxt.t == 1


def test_recursive_matches_direct_over_1000_steps(rng):
    inst = random_instance(6, 4, 99)
    fast = slow = prior_belief(inst)
    for _ in range(1000):
        a = inst.actions[rng.integers(inst.K)]
        r = rng.normal(0, 2)
        fast = update_belief(fast, a, r, inst.noise_var)
        slow = update_belief_direct(slow, a, r, inst.noise_var)
        assert np.max(np.abs(fast.mean - slow.mean)) <= 1e-8
        assert np.max(np.abs(fast.cov - slow.cov)) <= 1e-8
        # symmetric, dominated by the prior, factor reproduces cov
        assert np.max(np.abs(fast.cov - fast.cov.T)) <= 1e-10
    assert np.min(np.linalg.eigvalsh(inst.prior_cov - fast.cov)) >= -1e-8
    assert np.max(np.abs(fast.chol() @ fast.chol().T - fast.cov)) <= 1e-10


def test_action_variance_monotone(rng):
    inst = random_instance(5, 3, 4)
    b = prior_belief(inst)
    for _ in range(200):
        a = inst.actions[rng.integers(inst.K)]
        nxt = update_belief(b, a, rng.normal(), inst.noise_var)
        for x in inst.actions:
            assert x @ nxt.cov @ x <= x @ b.cov @ x + 1e-12
        b = nxt


@pytest.mark.parametrize("seed", range(5))
def test_posterior_consistency(seed):
    inst = random_instance(4, 3, seed, noise_var=1e-4)
    rng = np.random.default_rng(seed)
    theta = inst.prior_mean + inst.prior_chol @ rng.standard_normal(3)
    b = prior_belief(inst)
    sigma = math.sqrt(inst.noise_var)
    for t in range(3 * 50):
        a = inst.actions[t % inst.K]
        b = update_belief(b, a, a @ theta + sigma * rng.standard_normal(), inst.noise_var)
    assert np.max(np.abs(b.mean - theta)) <= 10 * sigma


def test_sample_belief_standard(rng):
    b = prior_belief(symmetric_instance())
    x = sample_belief(b, rng, 1_000_000)
    se = x.std(axis=0, ddof=1) / 1000
    assert np.all(np.abs(x.mean(axis=0)) <= 4 * se)


def test_sample_belief_covariance(rng):
    cov = random_pd(3, rng)
    b = GaussianBelief(np.zeros(3), cov)
    x = sample_belief(b, rng, 1_000_000)
    assert np.max(np.abs(np.cov(x, rowvar=False) - cov)) <= 0.01 * np.max(np.abs(cov))


def test_sample_belief_deterministic():
    b = prior_belief(symmetric_instance())
    np.testing.assert_array_equal(sample_belief(b, np.random.default_rng(1), 4),
                                  sample_belief(b, np.random.default_rng(1), 4))


def test_sample_belief_rejects_empty(rng):
    with pytest.raises(ValueError):
        sample_belief(prior_belief(symmetric_instance()), rng, 0)


def test_tiny_noise_collapse():
    inst = make_instance([[1, 0], [0, 1]], noise_var=1e-12)
    b = prior_belief(inst)
    for a in inst.actions:
        b = update_belief(b, a, 3.0, inst.noise_var)
    assert np.all(np.isfinite(b.cov))
    np.testing.assert_allclose(b.mean, [3.0, 3.0], atol=1e-9)
