"""Independent random streams keyed on (base seed, replication, role).

Streams come from Philox (a counter-based generator) seeded through
``SeedSequence`` spawn keys, so any replication can be regenerated in
isolation and the result does not depend on execution order.
"""
from __future__ import annotations

import enum

import numpy as np


class Role(enum.IntEnum):
    ENV_THETA = 0
    REWARD_NOISE = 1
    AGENT_SELECTION = 2
    PERTURBATION = 3
    POSTERIOR_SAMPLING = 4
    # experiment-level roles (not tied to a replication)
    BOUND_ETA = 16
    BOUND_ENTROPY = 17


def stream(base_seed: int, replication: int, role: Role | int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(replication), int(role)))
    return np.random.Generator(np.random.Philox(ss))


def experiment_stream(base_seed: int, role: Role | int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(role),))
    return np.random.Generator(np.random.Philox(ss))


class ReplicationStreams:
    """Lazily created per-role generators for one replication."""

    def __init__(self, base_seed: int, replication: int):
        self.base_seed = base_seed
        self.replication = replication
        self._cache: dict[Role, np.random.Generator] = {}

    def __getitem__(self, role: Role) -> np.random.Generator:
        gen = self._cache.get(role)
        if gen is None:
            gen = self._cache[role] = stream(self.base_seed, self.replication, role)
        return gen
