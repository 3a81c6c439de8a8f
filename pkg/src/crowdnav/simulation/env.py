"""Circle-crossing simulation: ORCA humans, displacement-controlled robot.

The robot is invisible to humans by default (their avoidance ignores it);
demonstrations flip `robot_visible` so the reciprocity assumption holds.
All agents advance simultaneously by one linear step per call.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..encoding import initial_history, push_history, vectorize_step
from .agents import SPEED_EPS, Action, AgentState, RobotState
from .orca import OrcaParams, orca_lines, preferred_velocity, solve_velocity
from .reward import DISCOMFORT_DIST, EventKind, StepEvent, compute_reward
from .scenario import Scenario


class ActionBoundError(ValueError):
    """Action displacement exceeds what the robot can cover in one step."""


class EpisodeDoneError(RuntimeError):
    """A finished episode was stepped again."""


@dataclass(frozen=True)
class EnvParams:
    dt: float = 0.25
    time_limit: float = 25.0
    goal_tolerance: float = 0.3
    discomfort_dist: float = DISCOMFORT_DIST
    robot_visible: bool = False
    orca: OrcaParams = OrcaParams()


@dataclass(frozen=True)
class EnvState:
    """Full simulation state; histories are (n+1, 3, 7), robot in row 0."""

    t: float
    step_index: int
    robot: RobotState
    humans: tuple[AgentState, ...]
    histories: np.ndarray
    done: bool

    @property
    def n_humans(self) -> int:
        return len(self.humans)


@dataclass(frozen=True)
class JointState:
    """What the planner observes: histories plus the robot's hidden state."""

    robot_history: np.ndarray  # (3, 7)
    human_histories: np.ndarray  # (n, 3, 7)
    goal: np.ndarray  # (2,), absolute frame
    v_pref: float


def joint_state(state: EnvState) -> JointState:
    return JointState(
        robot_history=np.array(state.histories[0]),
        human_histories=np.array(state.histories[1:]),
        goal=state.robot.goal,
        v_pref=state.robot.v_pref,
    )


def apply_action(robot: RobotState, action: Action, dt: float) -> RobotState:
    """Linear tracking layer: position offset by the action, velocity = action/dt."""
    limit = robot.v_pref * dt + SPEED_EPS
    if action.norm() > limit:
        raise ActionBoundError(
            f"action norm {action.norm():.6f} exceeds v_pref*dt = {robot.v_pref * dt:.6f}"
        )
    return replace(
        robot,
        px=robot.px + action.dx,
        py=robot.py + action.dy,
        vx=action.dx / dt,
        vy=action.dy / dt,
    )


class CrowdEnv:
    """Deterministic stepper; hold one instance per thread."""

    def __init__(self, params: EnvParams | None = None) -> None:
        params = params or EnvParams()
        # The ORCA resolution step must match the simulation step.
        self.params = replace(params, orca=replace(params.orca, time_step=params.dt))

    def reset(self, scenario: Scenario) -> EnvState:
        robot = RobotState(
            px=scenario.robot_start[0],
            py=scenario.robot_start[1],
            vx=0.0,
            vy=0.0,
            r=scenario.agent_radius,
            gx=scenario.robot_goal[0],
            gy=scenario.robot_goal[1],
            v_pref=scenario.v_pref,
        )
        humans = tuple(
            AgentState(px=s[0], py=s[1], vx=0.0, vy=0.0, r=scenario.human_radii[i])
            for i, s in enumerate(scenario.human_starts)
        )
        histories = np.stack(
            [initial_history((robot.px, robot.py), robot.r)]
            + [initial_history((h.px, h.py), h.r) for h in humans]
        )
        self._scenario = scenario
        return EnvState(
            t=0.0, step_index=0, robot=robot, humans=humans, histories=histories, done=False
        )

    def human_velocities(self, state: EnvState) -> list[tuple[float, float]]:
        """Next ORCA velocity per human; the robot is a neighbour only if visible."""
        velocities = []
        for i, human in enumerate(state.humans):
            neighbors: list[AgentState] = [h for j, h in enumerate(state.humans) if j != i]
            if self.params.robot_visible:
                neighbors.append(state.robot)
            goal = self._scenario.human_goals[i]
            pref = preferred_velocity((human.px, human.py), goal, self._scenario.v_pref, human.r)
            lines = orca_lines(human, neighbors, self.params.orca)
            (vx, vy), _ = solve_velocity(lines, self.params.orca.max_speed, pref[0], pref[1])
            velocities.append((vx, vy))
        return velocities

    def step(
        self, state: EnvState, action: Action
    ) -> tuple[EnvState, float, bool, StepEvent]:
        if state.done:
            raise EpisodeDoneError("cannot step a finished episode")

        dt = self.params.dt
        human_vels = self.human_velocities(state)
        new_robot = apply_action(state.robot, action, dt)
        new_humans = tuple(
            h.moved(h.px + vx * dt, h.py + vy * dt, vx, vy)
            for h, (vx, vy) in zip(state.humans, human_vels)
        )

        human_starts = np.array([[h.px, h.py] for h in state.humans]).reshape(-1, 2)
        human_ends = np.array([[h.px, h.py] for h in new_humans]).reshape(-1, 2)
        human_radii = np.array([h.r for h in state.humans])
        reward, event = compute_reward(
            robot_start=state.robot.position,
            robot_end=new_robot.position,
            robot_radius=state.robot.r,
            goal=state.robot.goal,
            goal_tolerance=self.params.goal_tolerance,
            human_starts=human_starts,
            human_ends=human_ends,
            human_radii=human_radii,
            discomfort_dist=self.params.discomfort_dist,
        )

        step_index = state.step_index + 1
        t = step_index * dt
        done = event.terminal
        if not done and t >= self.params.time_limit:
            event = StepEvent(EventKind.TIMEOUT)
            done = True

        histories = np.stack(
            [
                push_history(
                    state.histories[0],
                    vectorize_step(
                        state.robot.position, new_robot.position, new_robot.velocity, new_robot.r
                    ),
                )
            ]
            + [
                push_history(
                    state.histories[1 + i],
                    vectorize_step(
                        state.humans[i].position, h.position, h.velocity, h.r
                    ),
                )
                for i, h in enumerate(new_humans)
            ]
        )

        next_state = EnvState(
            t=t,
            step_index=step_index,
            robot=new_robot,
            humans=new_humans,
            histories=histories,
            done=done,
        )
        return next_state, reward, done, event
