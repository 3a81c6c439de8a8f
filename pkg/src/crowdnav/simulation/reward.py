"""Step reward: goal bonus, collision penalty, discomfort band, progress.

Branch order is fixed: goal, then collision, then discomfort, then
progress. `d_min` is the continuous minimum centre distance over the
step interval, so fast crossings between sampling instants still count.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import interval_min_distance

GOAL_REWARD = 2.0
COLLISION_REWARD = -0.4
DISCOMFORT_DIST = 0.2
PROGRESS_GAIN = 1.6


class EventKind(enum.Enum):
    REACHED_GOAL = "reached_goal"
    COLLISION = "collision"
    DISCOMFORT = "discomfort"
    TIMEOUT = "timeout"
    MOVING = "moving"


@dataclass(frozen=True)
class StepEvent:
    """What happened during one step; `d_min` only set for discomfort/collision."""

    kind: EventKind
    d_min: float | None = None

    @property
    def terminal(self) -> bool:
        return self.kind in (EventKind.REACHED_GOAL, EventKind.COLLISION, EventKind.TIMEOUT)


def compute_reward(
    robot_start: np.ndarray,
    robot_end: np.ndarray,
    robot_radius: float,
    goal: np.ndarray,
    goal_tolerance: float,
    human_starts: np.ndarray,
    human_ends: np.ndarray,
    human_radii: np.ndarray,
    discomfort_dist: float = DISCOMFORT_DIST,
) -> tuple[float, StepEvent]:
    """Reward and event for one transition of all agents.

    The goal branch dominates: reaching the goal scores 2 even if the same
    step also grazes a human. The discomfort penalty uses the surface
    clearance of the single closest human, `(d_min - R) - 0.2`, which is
    continuous at the outer boundary and -0.2 at contact.
    """
    robot_end = np.asarray(robot_end, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if float(np.hypot(*(robot_end - goal))) < goal_tolerance:
        return GOAL_REWARD, StepEvent(EventKind.REACHED_GOAL)

    closest_clearance = np.inf
    closest_d_min = np.inf
    for i in range(len(human_starts)):
        d_min = interval_min_distance(
            robot_start, robot_end, human_starts[i], human_ends[i]
        )
        clearance = d_min - (robot_radius + float(human_radii[i]))
        if clearance < closest_clearance:
            closest_clearance = clearance
            closest_d_min = d_min

    if closest_clearance < 0.0:
        return COLLISION_REWARD, StepEvent(EventKind.COLLISION, d_min=closest_d_min)
    if closest_clearance < discomfort_dist:
        return (
            closest_clearance - discomfort_dist,
            StepEvent(EventKind.DISCOMFORT, d_min=closest_d_min),
        )

    robot_start = np.asarray(robot_start, dtype=float)
    progress = PROGRESS_GAIN * (
        float(np.hypot(*(robot_start - goal))) - float(np.hypot(*(robot_end - goal)))
    )
    return progress, StepEvent(EventKind.MOVING)
