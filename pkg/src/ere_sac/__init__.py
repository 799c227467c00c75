"""Soft Actor-Critic with uniform, recency-emphasizing, prioritized and hybrid experience replay."""
from .agent import SacAgent, SacConfig, TrainingDiverged, UpdateResult
from .envs import EnvSpec, Pendulum, PointMass, make_env
from .ere import EreConfig, anneal_eta, expected_sample_counts, range_schedule, sampling_range
from .harness import MetricsRecord, TrainConfig, analyze, format_report, read_metrics, report, sweep, train
from .nn import Adam, DenseNet, PolicyHead
from .per import (PerConfig, PriorityTree, compute_td_priority, is_weight, normalized_is_weights,
                  sample_proportional_range)
from .replay import EmptyBufferError, ReplayBuffer, Transition

__version__ = "0.1.0"
