"""Discrete information measures, all in nats."""
from __future__ import annotations

import math

import numpy as np


class DistributionError(ValueError):
    pass


class DiscreteDistribution:
    """Probability vector over a finite set.

    Inputs whose total lies in [0.999, 1.001] are renormalized; anything else
    (or a negative / non-finite entry) is rejected.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        p = np.array(probs, dtype=float).reshape(-1)
        if p.size == 0 or not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DistributionError("probabilities must be finite and nonnegative")
        total = p.sum()
        if not 0.999 <= total <= 1.001:
            raise DistributionError(f"probabilities sum to {total}, not 1")
        self.probs = p / total

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __repr__(self) -> str:
        return f"DiscreteDistribution({self.probs.tolist()})"

    @classmethod
    def from_counts(cls, counts, alpha: float = 0.0) -> "DiscreteDistribution":
        counts = np.asarray(counts, dtype=float)
        return cls((counts + alpha) / (counts.sum() + alpha * counts.size))


def _as_probs(p) -> np.ndarray:
    if isinstance(p, DiscreteDistribution):
        return p.probs
    return DiscreteDistribution(p).probs


def _check_joint(table) -> np.ndarray:
    t = np.asarray(table, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise DistributionError("joint table must be finite and nonnegative")
    if abs(t.sum() - 1.0) > 1e-9:
        raise DistributionError(f"joint table sums to {t.sum()}, not 1")
    return t


def kl_divergence(P, Q) -> float:
    """KL(P || Q); ``inf`` when P puts mass where Q has none."""
    p, q = _as_probs(P), _as_probs(Q)
    if p.shape != q.shape:
        raise DistributionError(f"length mismatch: {p.size} vs {q.size}")
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * np.log(ps / qs))), 0.0)


def hellinger(P, Q) -> float:
    p, q = _as_probs(P), _as_probs(Q)
    if p.shape != q.shape:
        raise DistributionError(f"length mismatch: {p.size} vs {q.size}")
    return float(np.sqrt(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)))


def entropy(P) -> float:
    p = _as_probs(P)
    p = p[p > 0]
    return max(float(-np.sum(p * np.log(p))), 0.0)


def _entropy_raw(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def conditional_entropy(joint) -> float:
    """H(X | Y) for a table indexed [x, y]."""
    t = _check_joint(joint)
    total = 0.0
    for y, py in enumerate(t.sum(axis=0)):
        if py > 0:
            total += py * _entropy_raw(t[:, y] / py)
    return total


def _mi_table(t: np.ndarray) -> float:
    px = t.sum(axis=1, keepdims=True)
    py = t.sum(axis=0, keepdims=True)
    prod = px * py
    nz = t > 0
    return float(np.sum(t[nz] * np.log(t[nz] / prod[nz])))


def mutual_information(joint) -> float:
    """I(X; Y) as the KL divergence of the joint [x, y] from its product of marginals."""
    return _mi_table(_check_joint(joint))


def conditional_mutual_information(joint3) -> float:
    """I(X; Y | Z) for a table indexed [x, y, z]."""
    t = _check_joint(joint3)
    if t.ndim != 3:
        raise DistributionError("conditional mutual information needs a 3-way table")
    total = 0.0
    for z, pz in enumerate(t.sum(axis=(0, 1))):
        if pz > 0:
            total += pz * _mi_table(t[:, :, z] / pz)
    return total


def random_distribution(n: int, rng: np.random.Generator) -> np.ndarray:
    """Flat-Dirichlet draw: normalized i.i.d. Exponential(1) weights."""
    w = rng.exponential(1.0, n)
    return w / w.sum()
