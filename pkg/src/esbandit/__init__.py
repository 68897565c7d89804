"""Ensemble sampling and Thompson sampling on linear-Gaussian bandits, with regret-bound diagnostics."""
from .agents import Ensemble, es_init, es_select, es_update, ts_select, uniform_select
from .bandit import (InstanceError, LinearBanditInstance, best_action, draw_reward, random_instance, regret_gap,
                     sample_coefficient, symmetric_instance, validate_instance)
from .infometrics import DiscreteDistribution, entropy, hellinger, kl_divergence, mutual_information
from .posterior import GaussianBelief, prior_belief, sample_belief, update_belief

__version__ = "0.1.0"
