"""Dynamic IRS element allocation for spectrum-sharing MIMO communication and radar."""

__version__ = "0.1.0"

from .channel import ChannelSet, build_channel_set  # noqa: E402
from .composite import Metrics, Partition, PhaseShifts  # noqa: E402
from .config import ConfigError, ScenarioConfig, resolve_config  # noqa: E402
from .experiment import AggregateStats, compare, monte_carlo, run_trial, sweep  # noqa: E402
from .optimizer import JointAllocationOptimizer, joint_optimize  # noqa: E402
from .scenario import Layout, sample_layout  # noqa: E402

__all__ = [
    "AggregateStats", "ChannelSet", "ConfigError", "JointAllocationOptimizer", "Layout", "Metrics",
    "Partition", "PhaseShifts", "ScenarioConfig", "build_channel_set", "compare", "joint_optimize",
    "monte_carlo", "resolve_config", "run_trial", "sample_layout", "sweep",
]
