"""Circle-crossing scenario generation.

Humans start on a circle at uniformly random angles, perturbed by up to
0.5 m per coordinate, and head to the antipode of their perturbed start.
The robot crosses the circle vertically: start at the bottom, goal at
the top, unperturbed so test cases stay comparable across policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_CIRCLE_RADIUS = 4.0
DEFAULT_AGENT_RADIUS = 0.3
DEFAULT_V_PREF = 1.0
PERTURBATION = 0.5
# Clearance margin on top of summed radii when placing agents; matches the
# reward's discomfort distance so episodes never start inside it.
PLACEMENT_MARGIN = 0.2
MAX_PLACEMENT_ATTEMPTS = 1000


class ScenarioError(RuntimeError):
    """Raised when agent placement cannot satisfy the separation rule."""


@dataclass(frozen=True)
class Scenario:
    """Start/goal layout for one episode; fully determined by (n_humans, seed)."""

    robot_start: tuple[float, float]
    robot_goal: tuple[float, float]
    human_starts: tuple[tuple[float, float], ...]
    human_goals: tuple[tuple[float, float], ...]
    n_humans: int
    seed: int
    circle_radius: float = DEFAULT_CIRCLE_RADIUS
    agent_radius: float = DEFAULT_AGENT_RADIUS
    v_pref: float = DEFAULT_V_PREF
    human_radii: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.human_radii:
            object.__setattr__(
                self, "human_radii", (self.agent_radius,) * self.n_humans
            )


def make_scenario(
    n_humans: int,
    seed: int,
    circle_radius: float = DEFAULT_CIRCLE_RADIUS,
    agent_radius: float = DEFAULT_AGENT_RADIUS,
    v_pref: float = DEFAULT_V_PREF,
    perturbation: float = PERTURBATION,
) -> Scenario:
    """Sample a non-overlapping circle-crossing scenario.

    Each human start is re-sampled until it clears every previously placed
    start *and* goal by the summed radii plus the placement margin. Because
    every goal is the exact antipode of its start, this single check also
    keeps all goals mutually separated.
    """
    if n_humans < 1:
        raise ValueError(f"n_humans must be >= 1, got {n_humans}")

    rng = np.random.default_rng(seed)
    robot_start = (0.0, -circle_radius)
    robot_goal = (0.0, circle_radius)

    # Points the candidate start must clear: (x, y, radius).
    occupied: list[tuple[float, float, float]] = [
        (robot_start[0], robot_start[1], agent_radius),
        (robot_goal[0], robot_goal[1], agent_radius),
    ]
    starts: list[tuple[float, float]] = []
    goals: list[tuple[float, float]] = []

    for i in range(n_humans):
        for attempt in range(MAX_PLACEMENT_ATTEMPTS):
            angle = rng.uniform(0.0, 2.0 * math.pi)
            px = circle_radius * math.cos(angle) + rng.uniform(-perturbation, perturbation)
            py = circle_radius * math.sin(angle) + rng.uniform(-perturbation, perturbation)
            if _clear(px, py, agent_radius, occupied):
                break
        else:
            raise ScenarioError(
                f"could not place human {i} after {MAX_PLACEMENT_ATTEMPTS} attempts "
                f"(n_humans={n_humans}, seed={seed})"
            )
        starts.append((px, py))
        goals.append((-px, -py))
        occupied.append((px, py, agent_radius))
        occupied.append((-px, -py, agent_radius))

    return Scenario(
        robot_start=robot_start,
        robot_goal=robot_goal,
        human_starts=tuple(starts),
        human_goals=tuple(goals),
        n_humans=n_humans,
        seed=seed,
        circle_radius=circle_radius,
        agent_radius=agent_radius,
        v_pref=v_pref,
    )


def _clear(
    px: float, py: float, radius: float, occupied: list[tuple[float, float, float]]
) -> bool:
    for ox, oy, orad in occupied:
        if math.hypot(px - ox, py - oy) < radius + orad + PLACEMENT_MARGIN:
            return False
    return True
