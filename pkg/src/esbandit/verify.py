"""Numerical property suites behind ``esbandit verify``.

Every suite takes a generator and returns a list of :class:`Check` records.
Sizes default to the full acceptance scale; ``scale`` shrinks the Monte Carlo
sample counts proportionally for quick smoke runs.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import bounds
from .agents import Ensemble, es_init, es_select, es_update, es_update_direct
from .bandit import draw_reward, random_instance, sample_coefficient, symmetric_instance
from .infometrics import (conditional_mutual_information, hellinger, kl_divergence, mutual_information,
                          random_distribution)
from .posterior import prior_belief, update_belief, update_belief_direct


@dataclass
class Check:
    suite: str
    invariant: str
    measured: float
    bound: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _n(base: int, scale: float, floor: int = 10) -> int:
    return max(floor, int(round(base * scale)))


def posterior_oracle(rng: np.random.Generator, scale: float = 1.0, n_steps: int = 1000) -> list[Check]:
    """Recursive vs explicit-inverse updates for the posterior and for ensemble models."""
    inst = random_instance(8, 4, int(rng.integers(2**31)))
    fast = slow = prior_belief(inst)
    ens_fast = ens_slow = es_init(inst, 5, rng)
    dev_post = dev_ens = 0.0
    loewner = math.inf
    monotone = 0
    for _ in range(n_steps):
        a = inst.actions[rng.integers(inst.K)]
        r = float(rng.normal(0.0, 2.0))
        new_fast = update_belief(fast, a, r, inst.noise_var)
        new_slow = update_belief_direct(slow, a, r, inst.noise_var)
        w = math.sqrt(inst.noise_var) * rng.standard_normal(5)
        ens_slow = es_update_direct(ens_slow, slow.cov, new_slow.cov, a, r, inst.noise_var, w)
        ens_fast = _es_update_with(ens_fast, fast.cov, a, r, inst.noise_var, w)
        q_prev = np.einsum("ij,jk,ik->i", inst.actions, fast.cov, inst.actions)
        q_next = np.einsum("ij,jk,ik->i", inst.actions, new_fast.cov, inst.actions)
        monotone += int(np.any(q_next > q_prev + 1e-12))
        fast, slow = new_fast, new_slow
        dev_post = max(dev_post, np.max(np.abs(fast.mean - slow.mean)), np.max(np.abs(fast.cov - slow.cov)))
        dev_ens = max(dev_ens, np.max(np.abs(ens_fast.models - ens_slow.models)))
        loewner = min(loewner, float(np.min(np.linalg.eigvalsh(inst.prior_cov - fast.cov))))
    chol_err = float(np.max(np.abs(fast.chol() @ fast.chol().T - fast.cov)))
    return [
        Check("posterior-oracle", "recursive vs direct posterior, max-abs deviation", dev_post, 1e-8, dev_post <= 1e-8),
        Check("posterior-oracle", "rank-one vs direct ensemble update, max-abs deviation", dev_ens, 1e-8,
              dev_ens <= 1e-8),
        Check("posterior-oracle", "min eigenvalue of prior_cov - cov", loewner, -1e-8, loewner >= -1e-8),
        Check("posterior-oracle", "steps with increasing action variance", monotone, 0, monotone == 0),
        Check("posterior-oracle", "cholesky reconstruction error", chol_err, 1e-10, chol_err <= 1e-10),
    ]


def _es_update_with(ens: Ensemble, sigma_prev, a, r, noise_var, w) -> Ensemble:
    # rank-one update with externally supplied perturbations
    sa = sigma_prev @ a
    denom = noise_var + a @ sa
    return Ensemble(ens.models + np.outer((r + w - ens.models @ a) / denom, sa), ens.t + 1)


def ensemble_moments(rng: np.random.Generator, scale: float = 1.0, steps: int = 5) -> list[Check]:
    """Under a fixed action/reward record, every model is a posterior draw.

    Rows of one ensemble are independent given the record, so a single
    ensemble with n rows stands in for n one-model replications.
    """
    n = _n(100_000, scale, 1000)
    inst = random_instance(3, 2, int(rng.integers(2**31)), noise_var=0.5)
    theta = sample_coefficient(inst, rng)
    belief = prior_belief(inst)
    ens = es_init(inst, n, rng)
    checks = []
    for t in range(steps + 1):
        mean = ens.models.mean(axis=0)
        se = ens.models.std(axis=0, ddof=1) / math.sqrt(n)
        z = float(np.max(np.abs(mean - belief.mean) / se))
        cov_err = float(np.max(np.abs(np.cov(ens.models, rowvar=False) - belief.cov)) / np.max(np.abs(belief.cov)))
        checks.append(Check("ensemble-moments", f"t={t} max |mean - mu_t| / SE", z, 4.0, z <= 4.0))
        checks.append(Check("ensemble-moments", f"t={t} max-abs cov error relative to cov scale", cov_err, 0.02,
                            cov_err <= 0.02))
        if t == steps:
            break
        a = inst.actions[t % inst.K]
        r = float(a @ theta + math.sqrt(inst.noise_var) * rng.standard_normal())
        nxt = update_belief(belief, a, r, inst.noise_var)
        ens = es_update(ens, belief.cov, nxt.cov, a, r, inst.noise_var, rng)
        belief = nxt
    return checks


def fact1(rng: np.random.Generator, scale: float = 1.0) -> list[Check]:
    n_pairs = _n(10_000, scale)
    violations = 0
    worst = -math.inf
    for _ in range(n_pairs):
        n = int(rng.integers(2, 11))
        p, q = random_distribution(n, rng), random_distribution(n, rng)
        h2 = hellinger(p, q) ** 2
        slack = h2 - min(kl_divergence(p, q), kl_divergence(q, p))
        worst = max(worst, slack)
        violations += int(slack > 1e-12)
    return [Check("fact1", f"squared Hellinger exceeding min KL over {n_pairs} pairs", violations, 0,
                  violations == 0, f"largest excess {worst:.3e}")]


def random_gaussian_config(rng: np.random.Generator, max_k: int = 32) -> tuple[np.ndarray, np.ndarray]:
    K = int(rng.integers(1, max_k + 1))
    return rng.uniform(-3.0, 3.0, K), rng.uniform(0.1, 3.0, K)


def mc_mean_max_square(mu: np.ndarray, sd: np.ndarray, n: int, rng: np.random.Generator) -> tuple[float, float]:
    s1 = s2 = 0.0
    done = 0
    while done < n:
        m = min(1 << 15, n - done)
        x = np.max((mu + sd * rng.standard_normal((m, mu.size))) ** 2, axis=1)
        s1 += float(x.sum())
        s2 += float((x * x).sum())
        done += m
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def lemma9(rng: np.random.Generator, scale: float = 1.0, n_configs: int = 100) -> list[Check]:
    """E[max_a X_a^2] against the sub-Gaussian max-of-squares bound for independent Gaussians."""
    n = _n(100_000, scale, 1000)
    violations = 0
    worst = -math.inf
    for _ in range(n_configs):
        mu, sd = random_gaussian_config(rng)
        mean, se = mc_mean_max_square(mu, sd, n, rng)
        bound = bounds.subgaussian_maxsq_bound(mu.size, float(np.max(sd ** 2)), float(np.max(mu ** 2)))
        worst = max(worst, (mean - bound) / max(se, 1e-300))
        violations += int(mean > bound + 3 * se)
    return [Check("lemma9", f"configs with E[max X^2] > bound + 3 SE (of {n_configs})", violations, 0,
                  violations == 0, f"largest excess {worst:.2f} SE")]


def lemma10_grid(sd: float, n_points: int = 20) -> np.ndarray:
    """Symmetric grid strictly inside |t| < 1/(4 sd^2), excluding 0."""
    return (np.arange(n_points) - (n_points - 1) / 2) / (n_points / 2) / (4 * sd * sd)


def exact_centered_square_mgf(t: float, mu: float, sd: float) -> float:
    """E[exp(t (X^2 - E X^2))] for X ~ N(mu, sd^2), valid for t < 1/(2 sd^2)."""
    c = 1.0 - 2.0 * t * sd * sd
    return math.exp(t * mu * mu / c - 0.5 * math.log(c) - t * (mu * mu + sd * sd))


def lemma10(rng: np.random.Generator, scale: float = 1.0, n_configs: int = 20,
            centered: bool = False) -> list[Check]:
    """Monte Carlo MGF of X^2 - E X^2 against exp(16 t^2 sd^4) for Gaussian X."""
    n = _n(100_000, scale, 1000)
    violations = 0
    exact_violations = 0
    worst = -math.inf
    for _ in range(n_configs):
        mu = 0.0 if centered else float(rng.uniform(-3.0, 3.0))
        sd = float(rng.uniform(0.1, 3.0))
        x2 = (mu + sd * rng.standard_normal(n)) ** 2 - (mu * mu + sd * sd)
        for t in lemma10_grid(sd):
            vals = np.exp(t * x2)
            est = float(vals.mean())
            rel_se = float(vals.std(ddof=1) / math.sqrt(n) / est)
            bound = math.exp(16 * t * t * sd ** 4)
            worst = max(worst, math.log(est) - math.log(bound))
            violations += int(est > bound * (1 + 3 * rel_se))
            exact_violations += int(exact_centered_square_mgf(t, mu, sd) > bound)
    label = "centered " if centered else ""
    return [Check("lemma10", f"{label}grid points with MGF > bound (1 + 3 rel SE)", violations, 0, violations == 0,
                  f"closed-form violations {exact_violations}; largest log excess {worst:.3g}")]


def _initial_kl_samples(M: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    inst = symmetric_instance()
    p0 = np.array([0.5, 0.5])
    return np.array([kl_divergence(bounds.ensemble_action_dist(es_init(inst, M, rng), inst), p0)
                     for _ in range(reps)])


def lemma5(rng: np.random.Generator, scale: float = 1.0, sizes=(1, 2, 5, 10, 50)) -> list[Check]:
    """Expected KL of the t=0 ensemble action law on the symmetric two-action instance."""
    reps = _n(10_000, scale, 100)
    checks = []
    for M in sizes:
        kl = _initial_kl_samples(M, reps, rng)
        mean, se = float(kl.mean()), float(kl.std(ddof=1) / math.sqrt(reps))
        bound = bounds.lemma5_bound(2, 0, M)
        checks.append(Check("lemma5", f"M={M} E[KL(h0 || p0)]", mean, bound + 3 * se, mean <= bound + 3 * se))
        if M == 1:
            dev = abs(mean - math.log(2))
            checks.append(Check("lemma5", "M=1 |E[KL] - ln 2|", dev, 3 * se + 1e-12, dev <= 3 * se + 1e-12))
    return checks


def sanov(rng: np.random.Generator, scale: float = 1.0, sizes=(5, 10, 20), epsilons=(0.5, 1.0)) -> list[Check]:
    reps = _n(10_000, scale, 100)
    checks = []
    for M in sizes:
        kl = _initial_kl_samples(M, reps, rng)
        for eps in epsilons:
            freq = float(np.mean(kl > eps))
            tail = bounds.sanov_tail(2, M, 0, eps)
            checks.append(Check("sanov", f"M={M} eps={eps} P(KL > eps)", freq, tail, freq <= tail))
    return checks


def _random_joint(shape, rng) -> np.ndarray:
    return random_distribution(int(np.prod(shape)), rng).reshape(shape)


def chain_rule(rng: np.random.Generator, scale: float = 1.0) -> list[Check]:
    """Chain rule and KL form of mutual information on random 2x2x2 tables indexed [x, z1, z2]."""
    n = _n(1000, scale)
    worst_chain = worst_kl_form = 0.0
    for _ in range(n):
        joint = _random_joint((2, 2, 2), rng)
        lhs = mutual_information(joint.reshape(2, 4))
        rhs = mutual_information(joint.sum(axis=2)) + conditional_mutual_information(joint.transpose(0, 2, 1))
        worst_chain = max(worst_chain, abs(lhs - rhs))
        xy = joint.reshape(2, 4)
        px, py = xy.sum(axis=1), xy.sum(axis=0)
        kl_form = sum(px[i] * kl_divergence(xy[i] / px[i], py) for i in range(2))
        worst_kl_form = max(worst_kl_form, abs(kl_form - lhs))
    return [
        Check("chain-rule", "I(X;(Z1,Z2)) - I(X;Z1) - I(X;Z2|Z1)", worst_chain, 1e-10, worst_chain <= 1e-10),
        Check("chain-rule", "mutual information vs expected KL form", worst_kl_form, 1e-10, worst_kl_form <= 1e-10),
    ]


def corollary1(rng: np.random.Generator, scale: float = 1.0, n_instances: int = 20) -> list[Check]:
    n = _n(1_000_000, scale, 1000)
    violations = 0
    worst = -math.inf
    for _ in range(n_instances):
        inst = random_instance(int(rng.integers(2, 17)), int(rng.integers(1, 9)), int(rng.integers(2**31)))
        eta, se = bounds.estimate_eta(inst, n, rng)
        kappa = bounds.compute_kappa(inst)
        worst = max(worst, eta / kappa)
        violations += int(eta > kappa + 3 * se)
    return [Check("corollary1", f"instances with eta_hat > kappa + 3 SE (of {n_instances})", violations, 0,
                  violations == 0, f"largest eta/kappa {worst:.3f}")]


def decomposition(rng: np.random.Generator, scale: float = 1.0, times=(0, 5, 20)) -> list[Check]:
    """Regret decomposition identity at several steps of a replayed ensemble-sampling run."""
    n = _n(100_000, scale, 10_000)
    inst = random_instance(5, 3, int(rng.integers(2**31)))
    theta = sample_coefficient(inst, rng)
    belief = prior_belief(inst)
    ens = es_init(inst, 10, rng)
    checks = []
    for t in range(max(times) + 1):
        if t in times:
            cm = bounds.conditional_reward_means(belief, inst, n, rng)
            q = bounds.ensemble_action_dist(ens, inst)
            G, D = bounds.decompose_regret(q, cm.p, cm.cond, cm.marg)
            # expected optimal reward straight from the draws, minus the agent's expected reward
            direct = cm.mean_opt_reward - float(q.probs @ cm.marg)
            err = abs(direct - (G + D))
            checks.append(Check("decomposition", f"t={t} |direct regret - (G + D)|", err, 1e-10, err <= 1e-10))
            _, D_match = bounds.decompose_regret(cm.p, cm.p, cm.cond, cm.marg)
            checks.append(Check("decomposition", f"t={t} |D| with q = p", abs(D_match), 1e-10,
                                abs(D_match) <= 1e-10))
        _, a = es_select(ens, inst, rng)
        x = inst.actions[a]
        r = draw_reward(theta, a, inst, rng)
        nxt = update_belief(belief, x, r, inst.noise_var)
        ens = es_update(ens, belief.cov, nxt.cov, x, r, inst.noise_var, rng)
        belief = nxt
    return checks


SUITES: dict[str, Callable[..., list[Check]]] = {
    "posterior-oracle": posterior_oracle,
    "ensemble-moments": ensemble_moments,
    "fact1": fact1,
    "lemma5": lemma5,
    "lemma9": lemma9,
    "lemma10": lemma10,
    "sanov": sanov,
    "chain-rule": chain_rule,
    "corollary1": corollary1,
    "decomposition": decomposition,
}


def verify(suite_name: str, seed: int = 0, scale: float = 1.0) -> list[Check]:
    """Run one suite (or ``all``) and return its checks."""
    if suite_name == "all":
        names = list(SUITES)
    elif suite_name in SUITES:
        names = [suite_name]
    else:
        raise KeyError(f"unknown suite {suite_name!r}; choose from {sorted(SUITES)} or 'all'")
    checks = []
    for i, name in enumerate(names):
        rng = np.random.default_rng([seed, i])
        start = time.perf_counter()
        suite_checks = SUITES[name](rng, scale=scale)
        elapsed = time.perf_counter() - start
        for c in suite_checks:
            c.detail = (c.detail + "; " if c.detail else "") + f"{elapsed:.2f}s"
        checks.extend(suite_checks)
    return checks
