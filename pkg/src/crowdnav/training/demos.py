"""ORCA demonstration rollouts for imitation pretraining.

Demonstrations run with a *visible* robot so the reciprocity assumption
holds and the demonstrator rarely collides; the learner later faces the
harder invisible setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..policies import OrcaRobotPolicy
from ..seeding import derive_seed
from ..simulation.env import CrowdEnv, EnvParams, joint_state
from ..simulation.reward import EventKind
from ..simulation.scenario import make_scenario
from .replay import Transition

DEMO_STREAM = 1


@dataclass
class DemoSet:
    """Transitions plus the Monte-Carlo discounted return from each step."""

    transitions: list[Transition] = field(default_factory=list)
    returns: list[float] = field(default_factory=list)
    outcomes: list[str] = field(default_factory=list)

    def success_rate(self) -> float:
        if not self.outcomes:
            return 0.0
        return sum(o == "success" for o in self.outcomes) / len(self.outcomes)


def generate_demonstrations(
    k: int,
    seed: int,
    n_humans: int,
    gamma: float,
    env_params: EnvParams,
    scenario_kwargs: dict | None = None,
    goal_tolerance: float | None = None,
) -> DemoSet:
    """Roll k seeded episodes of the ORCA policy in the visible-robot setting."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not env_params.robot_visible:
        env_params = EnvParams(
            dt=env_params.dt,
            time_limit=env_params.time_limit,
            goal_tolerance=env_params.goal_tolerance,
            discomfort_dist=env_params.discomfort_dist,
            robot_visible=True,
            orca=env_params.orca,
        )
    env = CrowdEnv(env_params)
    policy = OrcaRobotPolicy(env.params.orca, goal_tolerance or env_params.goal_tolerance)
    demos = DemoSet()

    for episode in range(k):
        scenario_seed = derive_seed(seed, DEMO_STREAM, episode)
        scenario = make_scenario(n_humans, scenario_seed, **(scenario_kwargs or {}))
        state = env.reset(scenario)
        episode_transitions: list[Transition] = []
        episode_rewards: list[float] = []
        event = None
        while not state.done:
            action, _ = policy.decide(state)
            before = joint_state(state)
            state, reward, done, event = env.step(state, action)
            episode_transitions.append(
                Transition(
                    state=before,
                    action=action.as_array(),
                    reward=reward,
                    next_state=joint_state(state),
                    done=done,
                )
            )
            episode_rewards.append(reward)

        running = 0.0
        episode_returns = np.empty(len(episode_rewards))
        for i in range(len(episode_rewards) - 1, -1, -1):
            running = episode_rewards[i] + gamma * running
            episode_returns[i] = running

        demos.transitions.extend(episode_transitions)
        demos.returns.extend(float(g) for g in episode_returns)
        demos.outcomes.append(
            {
                EventKind.REACHED_GOAL: "success",
                EventKind.COLLISION: "collision",
                EventKind.TIMEOUT: "timeout",
            }[event.kind]
        )
    return demos
