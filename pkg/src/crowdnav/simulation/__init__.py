"""Deterministic circle-crossing crowd simulation."""

from .agents import Action, AgentState, RobotState
from .env import (
    ActionBoundError,
    CrowdEnv,
    EnvParams,
    EnvState,
    EpisodeDoneError,
    JointState,
    apply_action,
    joint_state,
)
from .geometry import interval_min_distance
from .orca import OrcaParams, orca_lines, orca_velocity, solve_velocity
from .reward import EventKind, StepEvent, compute_reward
from .scenario import Scenario, ScenarioError, make_scenario
from .trace import EpisodeTrace, TraceStep, read_trace, write_trace

__all__ = [
    "Action",
    "ActionBoundError",
    "AgentState",
    "CrowdEnv",
    "EnvParams",
    "EnvState",
    "EpisodeDoneError",
    "EpisodeTrace",
    "EventKind",
    "JointState",
    "OrcaParams",
    "RobotState",
    "Scenario",
    "ScenarioError",
    "StepEvent",
    "TraceStep",
    "apply_action",
    "compute_reward",
    "interval_min_distance",
    "joint_state",
    "make_scenario",
    "orca_lines",
    "orca_velocity",
    "read_trace",
    "solve_velocity",
    "write_trace",
]
