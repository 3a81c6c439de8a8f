"""Kinematic agent state types shared by the simulator and the planner."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

SPEED_EPS = 1e-9


@dataclass(frozen=True)
class AgentState:
    """Observable state of a disc-shaped agent: position, velocity, radius."""

    px: float
    py: float
    vx: float
    vy: float
    r: float

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise ValueError(f"agent radius must be > 0, got {self.r}")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.px, self.py])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))

    def moved(self, px: float, py: float, vx: float, vy: float) -> "AgentState":
        return replace(self, px=px, py=py, vx=vx, vy=vy)


@dataclass(frozen=True)
class RobotState(AgentState):
    """Robot state: observable fields plus hidden goal and preferred speed."""

    gx: float
    gy: float
    v_pref: float

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.v_pref <= 0:
            raise ValueError(f"v_pref must be > 0, got {self.v_pref}")

    @property
    def goal(self) -> np.ndarray:
        return np.array([self.gx, self.gy])

    def goal_distance(self) -> float:
        return float(np.hypot(self.gx - self.px, self.gy - self.py))


@dataclass(frozen=True)
class Action:
    """Displacement command in metres: the planned offset to the next position."""

    dx: float
    dy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy])

    def norm(self) -> float:
        return float(np.hypot(self.dx, self.dy))
