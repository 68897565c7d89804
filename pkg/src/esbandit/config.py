"""Experiment configuration: flat TOML files or inline JSON."""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import tomli

from .agents import AGENT_KINDS
from .bandit import InstanceError, LinearBanditInstance, random_instance, symmetric_instance, validate_instance

OUTPUT_DIR_ENV = "ESBANDIT_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    # instance: "symmetric", "random" (generated from K, d, instance_seed) or "inline"
    instance: str = "symmetric"
    actions: Optional[list] = None
    prior_mean: Optional[list] = None
    prior_cov: Optional[list] = None
    noise_var: float = 1.0
    K: int = 4
    d: int = 2
    instance_seed: int = 0
    agent: str = "es"
    ensemble_size: int = 10
    ensemble_sizes: list = field(default_factory=lambda: [1, 10, 100])
    horizon: int = 100
    replications: int = 100
    base_seed: int = 0
    posterior_samples: int = 10_000
    smoothing_alpha: float = 0.5
    mismatch_every: int = 10
    bound_samples: int = 100_000
    sanov_epsilon: float = 1.0
    workers: int = 1
    output_dir: Optional[str] = None
    csv: Optional[str] = None
    json: Optional[str] = None
    svg: Optional[str] = None

    def __post_init__(self):
        self._instance: Optional[LinearBanditInstance] = None

    def validate(self) -> "ExperimentConfig":
        if self.agent not in AGENT_KINDS:
            raise ConfigError(f"agent must be one of {AGENT_KINDS}, got {self.agent!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.agent == "es" and self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be at least 1")
        if not self.ensemble_sizes or any(int(m) < 1 for m in self.ensemble_sizes):
            raise ConfigError("ensemble_sizes must be a non-empty list of positive integers")
        if self.mismatch_every < 0:
            raise ConfigError("mismatch_every must be nonnegative")
        if self.mismatch_every > 0 and self.posterior_samples < 1000:
            raise ConfigError("posterior_samples must be at least 1000 when mismatch measurement is on")
        if self.smoothing_alpha < 0:
            raise ConfigError("smoothing_alpha must be nonnegative")
        if self.bound_samples < 1000:
            raise ConfigError("bound_samples must be at least 1000")
        if self.sanov_epsilon <= 0:
            raise ConfigError("sanov_epsilon must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        self.build_instance()
        return self

    def build_instance(self) -> LinearBanditInstance:
        if self._instance is not None:
            return self._instance
        try:
            if self.instance == "symmetric":
                inst = symmetric_instance(self.d, self.noise_var)
            elif self.instance == "random":
                inst = random_instance(self.K, self.d, self.instance_seed, self.noise_var)
            elif self.instance == "inline":
                if self.actions is None:
                    raise ConfigError("inline instance needs 'actions'")
                actions = np.asarray(self.actions, dtype=float)
                d = actions.shape[1] if actions.ndim == 2 else 0
                mu = np.zeros(d) if self.prior_mean is None else self.prior_mean
                cov = np.eye(d) if self.prior_cov is None else self.prior_cov
                inst = validate_instance(LinearBanditInstance(actions, np.asarray(mu, dtype=float),
                                                              np.asarray(cov, dtype=float), self.noise_var))
            else:
                raise ConfigError(f"unknown instance kind {self.instance!r}")
        except InstanceError as exc:
            raise ConfigError(f"invalid instance: {exc}") from exc
        self._instance = inst
        return inst

    def with_changes(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes).validate()

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def output_path(self, kind: str) -> Path:
        explicit = getattr(self, kind)
        if explicit:
            return Path(explicit)
        base = self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "results"
        return Path(base) / f"{self.name}.{kind}"


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT_FIELDS = {"K", "d", "instance_seed", "ensemble_size", "horizon", "replications", "base_seed",
               "posterior_samples", "mismatch_every", "bound_samples", "workers"}
_FLOAT_FIELDS = {"noise_var", "smoothing_alpha", "sanov_epsilon"}


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    unknown = set(data) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
        elif key in _FLOAT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            value = float(value)
        kwargs[key] = value
    return ExperimentConfig(**kwargs).validate()


def load_config(source: str) -> ExperimentConfig:
    """Parse a TOML/JSON config file, or an inline JSON object string."""
    text = source.strip()
    try:
        if text.startswith("{"):
            data = json.loads(text)
        else:
            path = Path(source)
            if not path.exists():
                raise ConfigError(f"config file not found: {source}")
            raw = path.read_text()
            data = json.loads(raw) if path.suffix == ".json" else tomli.loads(raw)
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a key-value mapping")
    return config_from_dict(data)
