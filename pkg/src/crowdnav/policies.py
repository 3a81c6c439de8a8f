"""Robot decision policies sharing one interface: `decide(state)`.

`decide` returns the displacement action and, for the learned policy,
per-step diagnostics (attention, candidate set) used by plot emitters.
"""

from __future__ import annotations

import torch

from .actor import ActInfo, act_verbose
from .networks import AgentNetworks
from .seeding import derive_seed
from .simulation.agents import Action
from .simulation.env import EnvState
from .simulation.orca import OrcaParams, orca_lines, preferred_velocity, solve_velocity


class OrcaRobotPolicy:
    """Robot plans with ORCA against the humans it observes.

    Under the invisible-robot setting the reciprocity assumption is
    violated (humans do not yield), which is exactly the baseline's
    known failure mode.
    """

    name = "orca"

    def __init__(self, params: OrcaParams, goal_tolerance: float = 0.3) -> None:
        self.params = params
        self.goal_tolerance = goal_tolerance

    def reseed(self, seed: int) -> None:
        """Stateless policy; nothing to reseed."""

    def decide(self, state: EnvState) -> tuple[Action, None]:
        robot = state.robot
        pref = preferred_velocity(
            (robot.px, robot.py), (robot.gx, robot.gy), robot.v_pref, self.goal_tolerance
        )
        lines = orca_lines(robot, state.humans, self.params)
        (vx, vy), _ = solve_velocity(lines, self.params.max_speed, pref[0], pref[1])
        dt = self.params.time_step
        return Action(vx * dt, vy * dt), None


class NetworkPolicy:
    """Learned policy: m sampled position points, selection module executes one."""

    name = "model"

    def __init__(
        self,
        nets: AgentNetworks,
        dt: float,
        m: int,
        deterministic: bool = False,
        seed: int = 0,
    ) -> None:
        self.nets = nets
        self.dt = dt
        self.m = m
        self.deterministic = deterministic
        self.generator = torch.Generator()
        self.generator.manual_seed(seed)

    def reseed(self, seed: int) -> None:
        # Per-episode stream so evaluation suites replay exactly.
        self.generator.manual_seed(derive_seed(seed, 7))

    def decide(self, state: EnvState) -> tuple[Action, ActInfo]:
        return act_verbose(
            state, self.nets, self.dt, self.m, self.generator, self.deterministic
        )
