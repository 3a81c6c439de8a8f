"""Crowd navigation: history-aware graph-attention SAC planner with an
ORCA-driven circle-crossing simulator, training loop and evaluation
protocol."""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, parse_config, write_config
from .networks import AgentNetworks, NetworkWidths
from .policies import NetworkPolicy, OrcaRobotPolicy

__all__ = [
    "AgentNetworks",
    "ConfigError",
    "NetworkPolicy",
    "NetworkWidths",
    "OrcaRobotPolicy",
    "RunConfig",
    "parse_config",
    "write_config",
    "__version__",
]
