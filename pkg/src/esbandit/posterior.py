"""Exact conjugate Gaussian posterior for the linear bandit."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bandit import LinearBanditInstance


class PosteriorError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GaussianBelief:
    """Posterior N(mean, cov) after ``t`` observations.

    The Cholesky factor is computed lazily on first use by :meth:`chol`.
    """

    mean: np.ndarray
    cov: np.ndarray
    t: int = 0
    _chol: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def chol(self) -> np.ndarray:
        if self._chol is None:
            object.__setattr__(self, "_chol", np.linalg.cholesky(self.cov))
        return self._chol


def prior_belief(instance: LinearBanditInstance) -> GaussianBelief:
    return GaussianBelief(instance.prior_mean.copy(), instance.prior_cov.copy(), 0,
                          _chol=None if instance.prior_chol is None else instance.prior_chol.copy())


def _symmetrize(cov: np.ndarray) -> np.ndarray:
    return 0.5 * (cov + cov.T)


def update_belief(belief: GaussianBelief, action: np.ndarray, reward: float, noise_var: float) -> GaussianBelief:
    """Rank-one conjugate update after observing ``reward`` for ``action``."""
    sa = belief.cov @ action
    denom = noise_var + action @ sa
    if not denom > 0:
        raise PosteriorError(f"nonpositive predictive variance {denom}")
    gain = sa / denom
    mean = belief.mean + gain * (reward - action @ belief.mean)
    cov = _symmetrize(belief.cov - np.outer(gain, sa))
    return GaussianBelief(mean, cov, belief.t + 1)


def update_belief_direct(belief: GaussianBelief, action: np.ndarray, reward: float,
                         noise_var: float) -> GaussianBelief:
    """Same update as :func:`update_belief`, written with explicit inverses (test oracle)."""
    action = np.asarray(action, dtype=float)
    if np.linalg.cond(belief.cov) > 1e14:
        raise PosteriorError("covariance not invertible at working precision")
    precision = np.linalg.inv(belief.cov)
    cov = np.linalg.inv(precision + np.outer(action, action) / noise_var)
    cov = _symmetrize(cov)
    mean = cov @ (precision @ belief.mean + (reward / noise_var) * action)
    return GaussianBelief(mean, cov, belief.t + 1)


def sample_belief(belief: GaussianBelief, rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """``n`` draws from the belief, shape (n, d)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    z = rng.standard_normal((n, belief.mean.size))
    return belief.mean + z @ belief.chol().T
