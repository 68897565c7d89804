"""Replications, aggregation and bound evaluation for regret experiments."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bounds
from .agents import es_init, es_select, es_update, ts_select, uniform_select
from .bandit import best_action, draw_reward, regret_gap, sample_coefficient
from .config import ExperimentConfig
from .infometrics import DiscreteDistribution, hellinger
from .posterior import prior_belief, update_belief
from .rng import ReplicationStreams, Role, experiment_stream


class ReplicationError(RuntimeError):
    pass


@dataclass
class ReplicationTrace:
    index: int
    gaps: np.ndarray
    mismatch: list = field(default_factory=list)
    initial_action_dist: Optional[np.ndarray] = None  # ensemble action law at t=0 (es only)


def _mismatch_sample(cfg: ExperimentConfig, inst, belief, ensemble, streams):
    rng = streams[Role.POSTERIOR_SAMPLING]
    if cfg.agent == "es":
        return bounds.measure_mismatch(ensemble, belief, inst, cfg.posterior_samples, rng, cfg.smoothing_alpha)
    p = bounds.estimate_opt_action_posterior(belief, inst, cfg.posterior_samples, rng, cfg.smoothing_alpha)
    if cfg.agent == "ts":
        # posterior matching: the action law is the optimal-action posterior itself
        q = p
    else:
        q = DiscreteDistribution(np.full(inst.K, 1.0 / inst.K))
    return bounds.mismatch_between(q, p, belief.t, cfg.posterior_samples)


def run_replication(cfg: ExperimentConfig, index: int) -> ReplicationTrace:
    """One full episode: draw theta, then T rounds of select, observe, update."""
    try:
        return _run_replication(cfg, index)
    except Exception as exc:
        raise ReplicationError(f"replication {index}: {exc}") from exc


def _run_replication(cfg: ExperimentConfig, index: int) -> ReplicationTrace:
    inst = cfg.build_instance()
    streams = ReplicationStreams(cfg.base_seed, index)
    theta = sample_coefficient(inst, streams[Role.ENV_THETA])
    opt = best_action(theta, inst, streams[Role.ENV_THETA])
    noise_rng = streams[Role.REWARD_NOISE]
    select_rng = streams[Role.AGENT_SELECTION]
    stride = cfg.mismatch_every
    agent = cfg.agent
    track_belief = agent != "uniform" or stride > 0
    noise_var = inst.noise_var
    actions = inst.actions

    belief = prior_belief(inst)
    ensemble = None
    trace = ReplicationTrace(index, np.zeros(cfg.horizon))
    if agent == "es":
        perturb_rng = streams[Role.PERTURBATION]
        ensemble = es_init(inst, cfg.ensemble_size, perturb_rng)
        trace.initial_action_dist = bounds.ensemble_action_dist(ensemble, inst).probs

    gaps = trace.gaps
    for t in range(cfg.horizon):
        if stride and t % stride == 0:
            trace.mismatch.append(_mismatch_sample(cfg, inst, belief, ensemble, streams))
        if agent == "es":
            _, a = es_select(ensemble, inst, select_rng)
        elif agent == "ts":
            a = ts_select(belief, inst, select_rng)
        else:
            a = uniform_select(inst, select_rng)
        reward = draw_reward(theta, a, inst, noise_rng)
        gaps[t] = regret_gap(theta, opt, a, inst)
        if track_belief:
            new_belief = update_belief(belief, actions[a], reward, noise_var)
            if agent == "es":
                ensemble = es_update(ensemble, belief.cov, new_belief.cov, actions[a], reward, noise_var,
                                     perturb_rng)
            belief = new_belief
    return trace


def _run_chunk(cfg: ExperimentConfig, indices: list[int]) -> list[ReplicationTrace]:
    return [run_replication(cfg, i) for i in indices]


def run_replications(cfg: ExperimentConfig, workers: Optional[int] = None) -> list[ReplicationTrace]:
    """All replications, returned in index order whatever the worker count."""
    workers = cfg.workers if workers is None else workers
    indices = list(range(cfg.replications))
    if workers <= 1 or cfg.replications < 2:
        return _run_chunk(cfg, indices)
    n_chunks = min(cfg.replications, 4 * workers)
    chunks = [indices[k::n_chunks] for k in range(n_chunks)]
    out: list[Optional[ReplicationTrace]] = [None] * cfg.replications
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk_result in pool.map(_run_chunk, [cfg] * len(chunks), chunks):
            for tr in chunk_result:
                out[tr.index] = tr
    return out  # type: ignore[return-value]


@dataclass
class RegretTrace:
    """Per-replication regret gaps plus per-step summaries."""

    gaps: np.ndarray  # (N, T)
    mismatch_steps: list  # measured t values
    mismatch_kl: np.ndarray  # (N, n_measured), may contain inf
    mismatch_hellinger: np.ndarray  # (N, n_measured)
    initial_action_dist: Optional[np.ndarray] = None  # mean over replications (es only)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.gaps, axis=1)

    def mean_cum_regret(self) -> np.ndarray:
        return self.cumulative.mean(axis=0)

    def se_cum_regret(self) -> np.ndarray:
        n = self.gaps.shape[0]
        if n < 2:
            return np.zeros(self.gaps.shape[1])
        return self.cumulative.std(axis=0, ddof=1) / math.sqrt(n)

    def mean_kl(self) -> np.ndarray:
        return self.mismatch_kl.mean(axis=0) if self.mismatch_kl.size else np.zeros(0)

    def mean_hellinger(self) -> np.ndarray:
        return self.mismatch_hellinger.mean(axis=0) if self.mismatch_hellinger.size else np.zeros(0)

    def rms_hellinger(self) -> np.ndarray:
        if not self.mismatch_hellinger.size:
            return np.zeros(0)
        return np.sqrt((self.mismatch_hellinger ** 2).mean(axis=0))


def aggregate(traces: list[ReplicationTrace]) -> RegretTrace:
    gaps = np.stack([tr.gaps for tr in traces])
    steps = [s.t for s in traces[0].mismatch]
    kl = np.array([[s.kl for s in tr.mismatch] for tr in traces], dtype=float).reshape(len(traces), len(steps))
    hel = np.array([[s.hellinger for s in tr.mismatch] for tr in traces], dtype=float).reshape(len(traces), len(steps))
    h0 = None
    if traces[0].initial_action_dist is not None:
        h0 = np.stack([tr.initial_action_dist for tr in traces]).mean(axis=0)
    return RegretTrace(gaps, steps, kl, hel, h0)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trace: RegretTrace
    report: bounds.BoundReport

    def bound_curve(self) -> Optional[np.ndarray]:
        """Regret bound evaluated at every horizon 1..T for the configured agent."""
        inst = self.config.build_instance()
        h = self.report.entropy_opt_hat
        T = self.config.horizon
        if self.config.agent == "es":
            return np.array([bounds.theorem1_bound(inst, t, self.config.ensemble_size, h) for t in range(1, T + 1)])
        if self.config.agent == "ts":
            return np.array([bounds.ts_bound(inst, t, h) for t in range(1, T + 1)])
        return None


def evaluate_bounds(cfg: ExperimentConfig) -> bounds.BoundReport:
    inst = cfg.build_instance()
    return bounds.build_bound_report(
        inst, cfg.horizon, cfg.ensemble_size, cfg.bound_samples,
        experiment_stream(cfg.base_seed, Role.BOUND_ETA),
        experiment_stream(cfg.base_seed, Role.BOUND_ENTROPY),
        sanov_epsilon=cfg.sanov_epsilon,
    )


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    trace = aggregate(run_replications(cfg, workers))
    report = evaluate_bounds(cfg)
    inst = cfg.build_instance()
    mean_cum = trace.mean_cum_regret()
    se_cum = trace.se_cum_regret()
    extras = {
        "agent": cfg.agent,
        "replications": cfg.replications,
        "final_mean_cum_regret": float(mean_cum[-1]),
        "final_se_cum_regret": float(se_cum[-1]),
    }
    if trace.mismatch_steps:
        extras["mean_hellinger_mismatch"] = float(trace.mismatch_hellinger.mean())
        extras["mean_kl_mismatch"] = float(trace.mismatch_kl.mean())
        if cfg.mismatch_every == 1:
            extras["theorem2_value"] = bounds.theorem2_bound(
                inst, cfg.horizon, report.entropy_opt_hat, trace.rms_hellinger().tolist(), report.eta_hat)
    if trace.initial_action_dist is not None:
        # averaging the t=0 ensemble laws over replications estimates the t=0 action law;
        # at t=0 the optimal-action posterior is the prior one
        pbar0 = DiscreteDistribution(trace.initial_action_dist)
        p0 = bounds.estimate_opt_action_posterior(prior_belief(inst), inst, cfg.bound_samples,
                                                  experiment_stream(cfg.base_seed, Role.POSTERIOR_SAMPLING))
        extras["initial_action_dist"] = pbar0.probs.tolist()
        extras["initial_opt_posterior"] = p0.probs.tolist()
        extras["initial_hellinger"] = hellinger(pbar0, p0)
    report.extras = extras
    return ExperimentResult(cfg, trace, report)


def run_mismatch_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> dict[int, ExperimentResult]:
    """Ensemble-sampling runs over every configured ensemble size."""
    stride = cfg.mismatch_every or 1
    return {int(M): run_experiment(cfg.with_changes(agent="es", ensemble_size=int(M), mismatch_every=stride),
                                   workers)
            for M in cfg.ensemble_sizes}
