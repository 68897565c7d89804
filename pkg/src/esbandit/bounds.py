"""Regret-bound constants, optimal-action distributions and the regret decomposition."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agents import Ensemble
from .bandit import LinearBanditInstance, best_actions
from .infometrics import DiscreteDistribution, entropy, hellinger, kl_divergence
from .posterior import GaussianBelief, sample_belief

CHUNK = 1 << 16


def _max_prior_variance(instance: LinearBanditInstance) -> float:
    A = instance.actions
    return float(np.max(np.einsum("ij,jk,ik->i", A, instance.prior_cov, A)))


def compute_iota(instance: LinearBanditInstance) -> float:
    return math.sqrt(2.0 * (_max_prior_variance(instance) + instance.noise_var))


def compute_kappa(instance: LinearBanditInstance) -> float:
    max_mean_sq = float(np.max((instance.actions @ instance.prior_mean) ** 2))
    return 2.0 * math.sqrt(subgaussian_maxsq_bound(instance.K, _max_prior_variance(instance), max_mean_sq)
                           + instance.noise_var)


def subgaussian_maxsq_bound(K: int, max_var_proxy: float, max_sq_mean: float) -> float:
    """Upper bound on E[max_a X_a^2] for K sub-Gaussian variables."""
    if K < 1 or max_var_proxy <= 0:
        raise ValueError("need K >= 1 and a positive variance proxy")
    return (4.0 * math.log(K) + 5.0) * max_var_proxy + max_sq_mean


def _prior_batches(instance: LinearBanditInstance, n: int, rng: np.random.Generator):
    done = 0
    while done < n:
        m = min(CHUNK, n - done)
        z = rng.standard_normal((m, instance.d))
        yield instance.prior_mean + z @ instance.prior_chol.T
        done += m


def estimate_eta(instance: LinearBanditInstance, n_samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo eta = 2 sqrt(E max_a (a^T theta)^2 + sigma^2) over the prior, with a delta-method SE."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    s1 = s2 = 0.0
    for thetas in _prior_batches(instance, n_samples, rng):
        x = np.max((thetas @ instance.actions.T) ** 2, axis=1)
        s1 += float(x.sum())
        s2 += float((x * x).sum())
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    se_mean = math.sqrt(var / n_samples)
    root = math.sqrt(mean + instance.noise_var)
    return 2.0 * root, se_mean / root


def _opt_counts(instance: LinearBanditInstance, n: int, rng: np.random.Generator) -> np.ndarray:
    counts = np.zeros(instance.K, dtype=np.int64)
    for thetas in _prior_batches(instance, n, rng):
        counts += np.bincount(best_actions(thetas, instance, rng), minlength=instance.K)
    return counts


def _miller_madow(counts: np.ndarray) -> float:
    n = counts.sum()
    return entropy(counts / n) + (np.count_nonzero(counts) - 1) / (2.0 * n)


def estimate_opt_entropy(instance: LinearBanditInstance, n_samples: int, rng: np.random.Generator,
                         n_boot: int = 200) -> tuple[float, float]:
    """Entropy of the prior optimal-action law: plug-in plus Miller-Madow, bootstrap SE."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    counts = _opt_counts(instance, n_samples, rng)
    est = _miller_madow(counts)
    boots = rng.multinomial(n_samples, counts / n_samples, size=n_boot)
    se = float(np.std([_miller_madow(c) for c in boots], ddof=1))
    return est, se


def theorem1_terms(instance: LinearBanditInstance, T: int, M: int, entropy_opt: float) -> tuple[float, float]:
    """(information term, ensemble-mismatch term) of the ensemble-sampling regret bound."""
    if T < 0 or M < 1 or entropy_opt < 0:
        raise ValueError("need T >= 0, M >= 1 and a nonnegative entropy")
    if T == 0:
        return 0.0, 0.0
    first = compute_iota(instance) * math.sqrt(instance.d * T * entropy_opt)
    second = compute_kappa(instance) * T * math.sqrt(instance.K * math.log(6 * T * M) / M)
    return first, second


def theorem1_bound(instance: LinearBanditInstance, T: int, M: int, entropy_opt: float) -> float:
    a, b = theorem1_terms(instance, T, M, entropy_opt)
    return a + b


def ts_bound(instance: LinearBanditInstance, T: int, entropy_opt: float) -> float:
    """Information term alone, the bound that applies to exact Thompson sampling."""
    return compute_iota(instance) * math.sqrt(instance.d * T * entropy_opt)


def theorem2_bound(instance: LinearBanditInstance, T: int, entropy_opt: float,
                   per_step_sqrt_mean_sq_hellinger: Sequence[float], eta: float) -> float:
    """Any-algorithm bound given the per-step root-mean-square Hellinger mismatch."""
    mismatch = list(per_step_sqrt_mean_sq_hellinger)
    if len(mismatch) != T:
        raise ValueError(f"expected {T} mismatch terms, got {len(mismatch)}")
    return ts_bound(instance, T, entropy_opt) + eta * float(np.sum(mismatch))


def corollary2_bound(instance: LinearBanditInstance, T: int, entropy_opt: float,
                     per_step_mean_min_kl: Sequence[float], eta: float) -> float:
    """KL form of :func:`theorem2_bound`: takes E[min(KL(q||p), KL(p||q))] per step."""
    roots = [math.sqrt(v) for v in per_step_mean_min_kl]
    return theorem2_bound(instance, T, entropy_opt, roots, eta)


def lemma5_bound(K: int, t: int, M: int) -> float:
    """Bound on E[KL(action law || optimal-action posterior)] at step t for M models."""
    if M < 1 or t < 0:
        raise ValueError("need M >= 1 and t >= 0")
    return K * math.log(6 * (t + 1) * M) / M


def sanov_tail(K: int, M: int, t: int, epsilon: float) -> float:
    """(t+1)^K (M+1)^K exp(-M eps), computed in log space."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return math.exp(K * math.log(t + 1) + K * math.log(M + 1) - M * epsilon)


def ensemble_action_dist(ensemble: Ensemble, instance: LinearBanditInstance) -> DiscreteDistribution:
    """Action law induced by picking a model uniformly and a uniform argmax for it."""
    M = ensemble.m_count
    values = ensemble.models @ instance.actions.T
    is_max = values == values.max(axis=1, keepdims=True)
    weights = is_max / is_max.sum(axis=1, keepdims=True)
    return DiscreteDistribution(weights.sum(axis=0) / M)


def estimate_opt_action_posterior(belief: GaussianBelief, instance: LinearBanditInstance, n_samples: int,
                                  rng: np.random.Generator, smoothing_alpha: float = 0.0) -> DiscreteDistribution:
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if smoothing_alpha < 0:
        raise ValueError("smoothing_alpha must be nonnegative")
    counts = np.bincount(best_actions(sample_belief(belief, rng, n_samples), instance, rng), minlength=instance.K)
    return DiscreteDistribution.from_counts(counts, smoothing_alpha)


@dataclass
class MismatchSample:
    t: int
    hat_p: DiscreteDistribution
    p_hat: DiscreteDistribution
    kl: float
    hellinger: float
    n_posterior_samples: int


def mismatch_between(q: DiscreteDistribution, p: DiscreteDistribution, t: int, n: int) -> MismatchSample:
    return MismatchSample(t, q, p, kl_divergence(q, p), hellinger(q, p), n)


def measure_mismatch(ensemble: Ensemble, belief: GaussianBelief, instance: LinearBanditInstance, n_samples: int,
                     rng: np.random.Generator, smoothing_alpha: float = 0.5) -> MismatchSample:
    """KL and Hellinger divergence of the ensemble's action law from a sampled optimal-action posterior."""
    q = ensemble_action_dist(ensemble, instance)
    p = estimate_opt_action_posterior(belief, instance, n_samples, rng, smoothing_alpha)
    return mismatch_between(q, p, belief.t, n_samples)


@dataclass
class ConditionalMeans:
    cond: np.ndarray  # E_t[a^T theta | A* = a]; NaN where no draw picked a
    marg: np.ndarray  # a^T mu_t
    p: DiscreteDistribution
    mean_opt_reward: float  # sample mean of max_a a^T theta over the same batch


def conditional_reward_means(belief: GaussianBelief, instance: LinearBanditInstance, n_samples: int,
                             rng: np.random.Generator) -> ConditionalMeans:
    """Per-action conditional and marginal mean rewards from one shared posterior batch."""
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 10000")
    thetas = sample_belief(belief, rng, n_samples)
    opt = best_actions(thetas, instance, rng)
    values = thetas @ instance.actions.T
    K = instance.K
    counts = np.bincount(opt, minlength=K)
    sums = np.bincount(opt, weights=values[np.arange(n_samples), opt], minlength=K)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    mean_opt = float(values[np.arange(n_samples), opt].mean())
    return ConditionalMeans(cond, instance.actions @ belief.mean,
                            DiscreteDistribution(counts / n_samples), mean_opt)


def decompose_regret(q, p, cond_means, marg_means) -> tuple[float, float]:
    """Split the conditional expected regret into main term G and approximation term D.

    ``q`` is the agent's action law, ``p`` the optimal-action posterior.
    """
    qv = np.asarray(q, dtype=float)
    pv = np.asarray(p, dtype=float)
    cond = np.asarray(cond_means, dtype=float)
    marg = np.asarray(marg_means, dtype=float)
    if not (qv.shape == pv.shape == cond.shape == marg.shape):
        raise ValueError("distributions and mean vectors must share length")
    undefined = np.isnan(cond)
    if np.any(undefined & (pv > 0)):
        raise ValueError("conditional mean undefined for an action with positive probability")
    cond = np.where(undefined, 0.0, cond)
    sq, sp = np.sqrt(qv), np.sqrt(pv)
    G = float(np.sum(sq * sp * (cond - marg)))
    D = float(np.sum((sp - sq) * (sp * cond + sq * marg)))
    direct = float(pv @ cond - qv @ marg)
    scale = max(1.0, float(np.sum(np.abs(pv * cond)) + np.sum(np.abs(qv * marg))))
    assert abs(G + D - direct) <= 1e-10 * scale, "decomposition identity violated"
    return G, D


@dataclass
class BoundReport:
    iota: float
    kappa: float
    eta_hat: float
    eta_se: float
    entropy_opt_hat: float
    entropy_se: float
    theorem1_value: float
    theorem1_first_term: float
    horizon: int
    ensemble_size: int
    lemma5_per_step: list = field(default_factory=list)
    sanov_params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def build_bound_report(instance: LinearBanditInstance, T: int, M: int, n_samples: int,
                       eta_rng: np.random.Generator, entropy_rng: np.random.Generator,
                       sanov_epsilon: float = 1.0, sanov_t: int = 0,
                       entropy_opt: Optional[tuple[float, float]] = None) -> BoundReport:
    eta, eta_se = estimate_eta(instance, n_samples, eta_rng)
    if entropy_opt is None:
        entropy_opt = estimate_opt_entropy(instance, n_samples, entropy_rng)
    h, h_se = entropy_opt
    first, second = theorem1_terms(instance, T, M, h)
    return BoundReport(
        iota=compute_iota(instance),
        kappa=compute_kappa(instance),
        eta_hat=eta,
        eta_se=eta_se,
        entropy_opt_hat=h,
        entropy_se=h_se,
        theorem1_value=first + second,
        theorem1_first_term=first,
        horizon=T,
        ensemble_size=M,
        lemma5_per_step=[lemma5_bound(instance.K, t, M) for t in range(T)],
        sanov_params={"K": instance.K, "M": M, "t": sanov_t, "epsilon": sanov_epsilon,
                      "tail": sanov_tail(instance.K, M, sanov_t, sanov_epsilon)},
    )

