"""ORCA solver: preferred-velocity recovery, symmetry, feasibility oracle,
and pairwise safety in seeded humans-only crowds."""

import math

import numpy as np
import pytest

from crowdnav.simulation.agents import AgentState
from crowdnav.simulation.orca import (
    OrcaParams,
    orca_lines,
    orca_velocity,
    preferred_velocity,
    solve_velocity,
)
from crowdnav.simulation.scenario import make_scenario

PARAMS = OrcaParams(neighbor_dist=10.0, time_horizon=5.0, time_step=0.25, max_speed=1.0)


def test_unconstrained_returns_preferred_velocity():
    agent = AgentState(px=0.0, py=0.0, vx=0.0, vy=0.0, r=0.3)
    v = orca_velocity(agent, goal=(5.0, 0.0), v_pref=1.0, neighbors=[], params=PARAMS)
    assert v == pytest.approx((1.0, 0.0), abs=1e-12)


def test_at_goal_with_far_neighbor_returns_zero():
    agent = AgentState(px=0.0, py=0.0, vx=0.0, vy=0.0, r=0.3)
    far = AgentState(px=50.0, py=0.0, vx=0.0, vy=0.0, r=0.3)
    v = orca_velocity(agent, goal=(0.0, 0.0), v_pref=1.0, neighbors=[far], params=PARAMS)
    assert v == (0.0, 0.0)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        OrcaParams(neighbor_dist=-1.0)
    with pytest.raises(ValueError):
        OrcaParams(time_step=0.0)


def _grid_oracle(lines, max_speed, pref, resolution=801):
    """Dense velocity-grid search for the feasible point closest to pref."""
    vs = np.linspace(-max_speed, max_speed, resolution)
    vx, vy = np.meshgrid(vs, vs)
    mask = vx**2 + vy**2 <= max_speed**2
    for line in lines:
        # Feasible side: det(direction, point - v) <= 0.
        det = line.dx * (line.py - vy) - line.dy * (line.px - vx)
        mask &= det <= 1e-9
    if not mask.any():
        return None
    dist = (vx - pref[0]) ** 2 + (vy - pref[1]) ** 2
    dist[~mask] = np.inf
    idx = np.unravel_index(np.argmin(dist), dist.shape)
    return float(vx[idx]), float(vy[idx])


class TestHeadOnSymmetry:
    def setup_method(self):
        self.a = AgentState(px=-2.0, py=0.0, vx=1.0, vy=0.0, r=0.3)
        self.b = AgentState(px=2.0, py=0.0, vx=-1.0, vy=0.0, r=0.3)

    def test_lateral_components_mirror(self):
        va = orca_velocity(self.a, goal=(5.0, 0.0), v_pref=1.0, neighbors=[self.b], params=PARAMS)
        vb = orca_velocity(self.b, goal=(-5.0, 0.0), v_pref=1.0, neighbors=[self.a], params=PARAMS)
        assert abs(va[1] + vb[1]) < 1e-9, "lateral dodges must mirror"
        assert abs(va[1]) > 1e-6, "head-on agents must actually dodge"
        assert va[0] > 0 and vb[0] < 0

    def test_solution_matches_grid_oracle(self):
        pref = preferred_velocity((self.a.px, self.a.py), (5.0, 0.0), 1.0, self.a.r)
        lines = orca_lines(self.a, [self.b], PARAMS)
        (vx, vy), feasible = solve_velocity(lines, PARAMS.max_speed, *pref)
        assert feasible
        oracle = _grid_oracle(lines, PARAMS.max_speed, pref)
        assert oracle is not None
        exact = math.hypot(vx - pref[0], vy - pref[1])
        gridded = math.hypot(oracle[0] - pref[0], oracle[1] - pref[1])
        # The grid point can only be slightly better by discretisation luck.
        assert exact <= gridded + 5e-3
        for line in lines:
            det = line.dx * (line.py - vy) - line.dy * (line.px - vx)
            assert det <= 1e-9, "solution violates a half-plane"


def test_solution_matches_grid_oracle_random_crowds():
    rng = np.random.default_rng(99)
    for _ in range(25):
        agents = [
            AgentState(
                px=float(rng.uniform(-3, 3)),
                py=float(rng.uniform(-3, 3)),
                vx=float(rng.uniform(-1, 1)),
                vy=float(rng.uniform(-1, 1)),
                r=0.3,
            )
            for _ in range(4)
        ]
        me, rest = agents[0], agents[1:]
        rest = [o for o in rest if math.hypot(o.px - me.px, o.py - me.py) > 2 * me.r]
        pref = preferred_velocity((me.px, me.py), (4.0, 4.0), 1.0, me.r)
        lines = orca_lines(me, rest, PARAMS)
        (vx, vy), feasible = solve_velocity(lines, PARAMS.max_speed, *pref)
        assert math.hypot(vx, vy) <= PARAMS.max_speed + 1e-9
        if not feasible:
            continue
        oracle = _grid_oracle(lines, PARAMS.max_speed, pref)
        if oracle is None:
            continue
        exact = math.hypot(vx - pref[0], vy - pref[1])
        gridded = math.hypot(oracle[0] - pref[0], oracle[1] - pref[1])
        assert exact <= gridded + 6e-3


def test_pairwise_safety_humans_only():
    """Mutually aware ORCA agents never overlap while LPs stay feasible."""
    violations = run_humans_only_episodes(n_episodes=500, n_humans=5, seed_base=2000)
    assert violations == 0


def run_humans_only_episodes(n_episodes, n_humans, seed_base, max_steps=100):
    dt = PARAMS.time_step
    violations = 0
    for episode in range(n_episodes):
        scenario = make_scenario(n_humans, seed_base + episode)
        agents = [
            AgentState(px=s[0], py=s[1], vx=0.0, vy=0.0, r=scenario.agent_radius)
            for s in scenario.human_starts
        ]
        feasible_episode = True
        for _ in range(max_steps):
            new_agents = []
            for i, agent in enumerate(agents):
                pref = preferred_velocity(
                    (agent.px, agent.py), scenario.human_goals[i], scenario.v_pref, agent.r
                )
                lines = orca_lines(agent, agents[:i] + agents[i + 1:], PARAMS)
                (vx, vy), feasible = solve_velocity(lines, PARAMS.max_speed, *pref)
                feasible_episode &= feasible
                new_agents.append(
                    agent.moved(agent.px + vx * dt, agent.py + vy * dt, vx, vy)
                )
            agents = new_agents
            if feasible_episode:
                for i in range(len(agents)):
                    for j in range(i + 1, len(agents)):
                        gap = math.hypot(
                            agents[i].px - agents[j].px, agents[i].py - agents[j].py
                        )
                        if gap < agents[i].r + agents[j].r:
                            violations += 1
    return violations
