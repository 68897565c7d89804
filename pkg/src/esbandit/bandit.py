"""Linear-Gaussian bandit instances and environment dynamics."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class InstanceError(ValueError):
    """Raised when a bandit instance violates one of its invariants."""


@dataclass(frozen=True)
class LinearBanditInstance:
    """K actions in d dimensions with prior N(prior_mean, prior_cov) and noise variance.

    Build one directly and pass it through :func:`validate_instance` before use;
    validation caches the lower Cholesky factor of the prior covariance.
    """

    actions: np.ndarray
    prior_mean: np.ndarray
    prior_cov: np.ndarray
    noise_var: float
    prior_chol: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def K(self) -> int:
        return self.actions.shape[0]

    @property
    def d(self) -> int:
        return self.actions.shape[1]

    @property
    def is_validated(self) -> bool:
        return self.prior_chol is not None

    def to_dict(self) -> dict:
        return {
            "actions": self.actions.tolist(),
            "prior_mean": self.prior_mean.tolist(),
            "prior_cov": self.prior_cov.tolist(),
            "noise_var": float(self.noise_var),
        }


@dataclass
class Trajectory:
    theta: np.ndarray
    opt_action_index: int
    steps: list = field(default_factory=list)  # (action_index, reward) pairs


def validate_instance(instance: LinearBanditInstance) -> LinearBanditInstance:
    """Check every invariant and return a copy carrying the prior factorization."""
    actions = np.array(instance.actions, dtype=float)
    mu = np.array(instance.prior_mean, dtype=float).reshape(-1)
    cov = np.array(instance.prior_cov, dtype=float)
    noise_var = float(instance.noise_var)

    if actions.ndim != 2 or actions.shape[0] < 1 or actions.shape[1] < 1:
        raise InstanceError(f"actions must be a non-empty K-by-d matrix, got shape {actions.shape}")
    K, d = actions.shape
    if mu.shape != (d,):
        raise InstanceError(f"prior_mean has length {mu.size}, expected {d}")
    if cov.shape != (d, d):
        raise InstanceError(f"prior_cov has shape {cov.shape}, expected ({d}, {d})")
    for name, arr in (("actions", actions), ("prior_mean", mu), ("prior_cov", cov)):
        if not np.all(np.isfinite(arr)):
            raise InstanceError(f"{name} contains NaN or infinite entries")
    if not np.isfinite(noise_var):
        raise InstanceError("noise_var contains NaN or infinite entries")
    if noise_var <= 0:
        raise InstanceError(f"noise_var must be positive, got {noise_var}")

    scale = np.max(np.abs(cov))
    if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
        raise InstanceError("prior_cov not symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InstanceError("prior_cov not positive definite") from None
    if np.min(np.diag(chol)) ** 2 <= 1e-10 * np.max(np.diag(cov)):
        raise InstanceError("prior_cov not positive definite")

    seen = set()
    for i, row in enumerate(actions):
        key = row.tobytes()
        if key in seen:
            raise InstanceError(f"duplicate action at row {i}")
        seen.add(key)

    for arr in (actions, mu, cov, chol):
        arr.setflags(write=False)
    return LinearBanditInstance(actions, mu, cov, noise_var, prior_chol=chol)


def _require_validated(instance: LinearBanditInstance) -> None:
    if instance.prior_chol is None:
        raise InstanceError("instance has not been validated")


def sample_coefficient(instance: LinearBanditInstance, rng: np.random.Generator) -> np.ndarray:
    _require_validated(instance)
    z = rng.standard_normal(instance.d)
    return instance.prior_mean + instance.prior_chol @ z


def argmax_set(values: np.ndarray) -> np.ndarray:
    """Indices attaining the exact float maximum."""
    return np.flatnonzero(values == values.max())


def best_action(theta: np.ndarray, instance: LinearBanditInstance, rng: np.random.Generator) -> int:
    """Index of a maximizer of a^T theta; exact ties are broken uniformly with ``rng``."""
    values = instance.actions @ theta
    ties = argmax_set(values)
    if ties.size == 1:
        return int(ties[0])
    return int(ties[rng.integers(ties.size)])


def best_actions(thetas: np.ndarray, instance: LinearBanditInstance, rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`best_action` over the rows of ``thetas``."""
    values = thetas @ instance.actions.T
    idx = np.argmax(values, axis=1)
    is_max = values == values[np.arange(values.shape[0]), idx][:, None]
    n_ties = is_max.sum(axis=1)
    for row in np.flatnonzero(n_ties > 1):
        ties = np.flatnonzero(is_max[row])
        idx[row] = ties[rng.integers(ties.size)]
    return idx


def draw_reward(theta: np.ndarray, action_index: int, instance: LinearBanditInstance,
                rng: np.random.Generator) -> float:
    # only the executed coordinate of the noise vector is sampled
    mean = float(instance.actions[action_index] @ theta)
    return mean + np.sqrt(instance.noise_var) * rng.standard_normal()


def regret_gap(theta: np.ndarray, opt_index: int, chosen_index: int, instance: LinearBanditInstance) -> float:
    """Mean-reward shortfall (a_opt - a_chosen)^T theta of the chosen action."""
    if chosen_index == opt_index:
        return 0.0
    gap = float((instance.actions[opt_index] - instance.actions[chosen_index]) @ theta)
    if gap < -1e-9:
        raise ValueError(f"negative regret gap {gap}: opt_index {opt_index} is not a maximizer")
    return max(gap, 0.0)


def symmetric_instance(d: int = 2, noise_var: float = 1.0) -> LinearBanditInstance:
    """Two antipodal actions +e1 and -e1 under an isotropic standard-normal prior."""
    actions = np.zeros((2, d))
    actions[0, 0] = 1.0
    actions[1, 0] = -1.0
    return validate_instance(LinearBanditInstance(actions, np.zeros(d), np.eye(d), noise_var))


def random_instance(K: int, d: int, seed: int, noise_var: float = 1.0,
                    mean_scale: float = 0.5) -> LinearBanditInstance:
    """Random instance with unit-norm actions (raw Gaussian scalars when d = 1) and a correlated prior."""
    rng = np.random.default_rng(seed)
    actions = rng.standard_normal((K, d))
    if d > 1:
        actions /= np.linalg.norm(actions, axis=1, keepdims=True)
    mu = mean_scale * rng.standard_normal(d)
    B = rng.standard_normal((d, d)) / np.sqrt(d)
    cov = B @ B.T + 0.25 * np.eye(d)
    cov = 0.5 * (cov + cov.T)
    return validate_instance(LinearBanditInstance(actions, mu, cov, noise_var))


def replace(instance: LinearBanditInstance, **changes) -> LinearBanditInstance:
    """Copy an instance with some fields changed and re-validate it."""
    fields = {"actions": instance.actions, "prior_mean": instance.prior_mean,
              "prior_cov": instance.prior_cov, "noise_var": instance.noise_var}
    fields.update(changes)
    return validate_instance(dataclasses.replace(instance, prior_chol=None, **fields))
