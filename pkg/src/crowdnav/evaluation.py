"""Episode rollouts and the 500-case evaluation protocol.

Outcomes partition exactly (integer counts); navigation time is averaged
over successful episodes only, matching the benchmark convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .simulation.env import CrowdEnv, EnvParams
from .simulation.reward import EventKind
from .simulation.scenario import Scenario, make_scenario
from .simulation.trace import EpisodeTrace, TraceStep

OUTCOME_BY_EVENT = {
    EventKind.REACHED_GOAL: "success",
    EventKind.COLLISION: "collision",
    EventKind.TIMEOUT: "timeout",
}


@dataclass
class EpisodeResult:
    outcome: str  # success | collision | timeout
    nav_time: float
    seed: int
    total_reward: float
    trace: EpisodeTrace

    @property
    def success(self) -> bool:
        return self.outcome == "success"


@dataclass
class Metrics:
    """Aggregate outcome statistics over one evaluation suite."""

    n_success: int = 0
    n_collision: int = 0
    n_timeout: int = 0
    success_times: list[float] = field(default_factory=list)

    @property
    def n_cases(self) -> int:
        return self.n_success + self.n_collision + self.n_timeout

    @property
    def success_rate(self) -> float:
        return self.n_success / self.n_cases

    @property
    def collision_rate(self) -> float:
        return self.n_collision / self.n_cases

    @property
    def timeout_rate(self) -> float:
        return self.n_timeout / self.n_cases

    @property
    def avg_nav_time(self) -> float:
        """Mean time of successful episodes; nan when none succeeded."""
        if not self.success_times:
            return float("nan")
        return float(np.mean(self.success_times))

    def add(self, result: EpisodeResult) -> None:
        if result.outcome == "success":
            self.n_success += 1
            self.success_times.append(result.nav_time)
        elif result.outcome == "collision":
            self.n_collision += 1
        elif result.outcome == "timeout":
            self.n_timeout += 1
        else:
            raise ValueError(f"unknown outcome {result.outcome!r}")

    def summary_table(self, label: str = "policy") -> str:
        header = f"{'method':<12} {'success(%)':>10} {'collision(%)':>12} {'timeout(%)':>10} {'time(s)':>8}"
        row = (
            f"{label:<12} {100 * self.success_rate:>10.1f} "
            f"{100 * self.collision_rate:>12.1f} {100 * self.timeout_rate:>10.1f} "
            f"{self.avg_nav_time:>8.2f}"
        )
        return header + "\n" + row


def run_episode(
    policy,
    case_seed: int,
    n_humans: int,
    env_params: EnvParams | None = None,
    scenario: Scenario | None = None,
    scenario_kwargs: dict | None = None,
) -> EpisodeResult:
    """Deterministic rollout of one seeded test case with full trace capture."""
    env = CrowdEnv(env_params)
    if scenario is None:
        scenario = make_scenario(n_humans, case_seed, **(scenario_kwargs or {}))
    if hasattr(policy, "reseed"):
        policy.reseed(case_seed)
    state = env.reset(scenario)

    trace = EpisodeTrace(
        n_humans=scenario.n_humans,
        dt=env.params.dt,
        robot_radius=scenario.agent_radius,
        human_radii=scenario.human_radii,
        goal=scenario.robot_goal,
        scenario_seed=scenario.seed,
    )
    trace.steps.append(_trace_step(state, 0.0, "init"))

    total_reward = 0.0
    event = None
    while not state.done:
        action, info = policy.decide(state)
        if info is not None:
            trace.attention[state.step_index] = info.attention
            trace.candidates[state.step_index] = (info.candidates, info.selected_index)
        state, reward, done, event = env.step(state, action)
        total_reward += reward
        trace.steps.append(_trace_step(state, reward, event.kind.value))

    outcome = OUTCOME_BY_EVENT[event.kind]
    return EpisodeResult(
        outcome=outcome,
        nav_time=state.t,
        seed=case_seed,
        total_reward=total_reward,
        trace=trace,
    )


def _trace_step(state, reward: float, event: str) -> TraceStep:
    return TraceStep(
        t=state.t,
        robot_pose=(state.robot.px, state.robot.py, state.robot.vx, state.robot.vy),
        human_poses=tuple((h.px, h.py, h.vx, h.vy) for h in state.humans),
        reward=reward,
        event=event,
    )


def evaluate_suite(
    policy,
    n_cases: int,
    n_humans: int,
    base_seed: int,
    env_params: EnvParams | None = None,
    scenario_kwargs: dict | None = None,
    out_dir: str | Path | None = None,
    label: str | None = None,
) -> Metrics:
    """Run the contiguous seed block base_seed..base_seed+n_cases-1."""
    if n_cases < 1:
        raise ValueError(f"n_cases must be >= 1, got {n_cases}")
    metrics = Metrics()
    rows = []
    for i in range(n_cases):
        seed = base_seed + i
        result = run_episode(
            policy, seed, n_humans, env_params=env_params, scenario_kwargs=scenario_kwargs
        )
        metrics.add(result)
        rows.append((seed, result.outcome, result.nav_time))

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "episodes.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "outcome", "nav_time"])
            for seed, outcome, nav_time in rows:
                writer.writerow([seed, outcome, repr(nav_time)])
        (out_dir / "summary.txt").write_text(
            metrics.summary_table(label or getattr(policy, "name", "policy")) + "\n"
        )
    return metrics
