"""Thompson sampling, ensemble sampling and a uniform baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bandit import LinearBanditInstance, best_action
from .posterior import GaussianBelief, sample_belief

AGENT_KINDS = ("ts", "es", "uniform")


@dataclass
class Ensemble:
    """M model vectors maintained by ensemble sampling, one per row."""

    models: np.ndarray
    t: int = 0

    @property
    def m_count(self) -> int:
        return self.models.shape[0]


def ts_select(belief: GaussianBelief, instance: LinearBanditInstance, rng: np.random.Generator) -> int:
    theta = sample_belief(belief, rng, 1)[0]
    return best_action(theta, instance, rng)


def es_init(instance: LinearBanditInstance, M: int, rng: np.random.Generator) -> Ensemble:
    if M < 1:
        raise ValueError("ensemble size must be at least 1")
    z = rng.standard_normal((M, instance.d))
    return Ensemble(instance.prior_mean + z @ instance.prior_chol.T, 0)


def es_select(ensemble: Ensemble, instance: LinearBanditInstance, rng: np.random.Generator) -> tuple[int, int]:
    """Pick a model uniformly and act greedily for it; returns (model index, action index)."""
    m = int(rng.integers(ensemble.m_count))
    return m, best_action(ensemble.models[m], instance, rng)


def es_update(ensemble: Ensemble, sigma_prev: np.ndarray, sigma_next: np.ndarray, action: np.ndarray,
              reward: float, noise_var: float, rng: np.random.Generator) -> Ensemble:
    """Perturbed incremental update of every model.

    Each model sees the shared reward plus its own fresh N(0, noise_var)
    perturbation. The gain uses ``sigma_prev`` only; ``sigma_next`` is the
    matching post-update covariance, required by the explicit form
    :func:`es_update_direct`.
    """
    del sigma_next
    sa = sigma_prev @ action
    denom = noise_var + action @ sa
    perturb = np.sqrt(noise_var) * rng.standard_normal(ensemble.m_count)
    resid = reward + perturb - ensemble.models @ action
    models = ensemble.models + np.outer(resid / denom, sa)
    if not np.all(np.isfinite(models)):
        raise FloatingPointError("non-finite ensemble after update; check the covariance inputs")
    return Ensemble(models, ensemble.t + 1)


def es_update_direct(ensemble: Ensemble, sigma_prev: np.ndarray, sigma_next: np.ndarray, action: np.ndarray,
                     reward: float, noise_var: float, perturbations: np.ndarray) -> Ensemble:
    """Literal form with an explicit inverse of ``sigma_prev`` and given perturbations (test oracle)."""
    prec = np.linalg.inv(sigma_prev)
    rhs = ensemble.models @ prec.T + np.outer((reward + perturbations) / noise_var, action)
    return Ensemble(rhs @ sigma_next.T, ensemble.t + 1)


def uniform_select(instance: LinearBanditInstance, rng: np.random.Generator) -> int:
    return int(rng.integers(instance.K))
