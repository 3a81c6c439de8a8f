"""Optimal reciprocal collision avoidance for disc agents.

Each neighbour induces a half-plane of permitted velocities; the solver
returns the permitted velocity closest to the preferred one via an
incremental two-dimensional linear program. When the program is
infeasible (dense crowds), a secondary program minimises the maximum
constraint violation ("safest possible" velocity).

Plain-float implementation: this runs once per agent per step for every
agent in the simulation, so it avoids numpy overhead on 2-vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .agents import AgentState

_EPS = 1e-10


@dataclass(frozen=True)
class OrcaParams:
    """Solver parameters; `time_step` must match the simulation step.

    `safety_space` inflates combined radii inside the constraint
    construction only: optimal solutions ride constraint boundaries, so
    without a margin agents graze at exactly the radii sum and trip
    continuous collision checks.
    """

    neighbor_dist: float = 10.0
    time_horizon: float = 5.0
    time_step: float = 0.25
    max_speed: float = 1.0
    safety_space: float = 0.01

    def __post_init__(self) -> None:
        for name in ("neighbor_dist", "time_horizon", "time_step", "max_speed"):
            if getattr(self, name) <= 0:
                raise ValueError(f"OrcaParams.{name} must be > 0")
        if self.safety_space < 0:
            raise ValueError("OrcaParams.safety_space must be >= 0")


@dataclass(frozen=True)
class HalfPlane:
    """Directed line; permitted velocities lie on its left side."""

    px: float
    py: float
    dx: float
    dy: float


def _det(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def orca_lines(
    self_agent: "AgentState",
    neighbors: Sequence["AgentState"],
    params: OrcaParams,
) -> list[HalfPlane]:
    """Half-plane constraints induced by each neighbour within range.

    Responsibility for avoidance is split evenly (each agent takes half
    of the required relative velocity change).
    """
    lines: list[HalfPlane] = []
    inv_horizon = 1.0 / params.time_horizon
    inv_step = 1.0 / params.time_step

    for other in neighbors:
        rel_x = other.px - self_agent.px
        rel_y = other.py - self_agent.py
        if math.hypot(rel_x, rel_y) >= params.neighbor_dist:
            continue
        rvx = self_agent.vx - other.vx
        rvy = self_agent.vy - other.vy
        dist_sq = rel_x * rel_x + rel_y * rel_y
        combined = self_agent.r + other.r + params.safety_space
        combined_sq = combined * combined

        if dist_sq > combined_sq:
            # Not yet colliding: cut-off disc or cone legs of the velocity
            # obstacle truncated at the time horizon.
            wx = rvx - inv_horizon * rel_x
            wy = rvy - inv_horizon * rel_y
            w_len_sq = wx * wx + wy * wy
            dot1 = wx * rel_x + wy * rel_y
            if dot1 < 0.0 and dot1 * dot1 > combined_sq * w_len_sq:
                w_len = math.sqrt(w_len_sq)
                ux, uy = wx / w_len, wy / w_len
                dir_x, dir_y = uy, -ux
                u_x = (combined * inv_horizon - w_len) * ux
                u_y = (combined * inv_horizon - w_len) * uy
            else:
                leg = math.sqrt(dist_sq - combined_sq)
                if _det(rel_x, rel_y, wx, wy) > 0.0:
                    dir_x = (rel_x * leg - rel_y * combined) / dist_sq
                    dir_y = (rel_x * combined + rel_y * leg) / dist_sq
                else:
                    dir_x = -(rel_x * leg + rel_y * combined) / dist_sq
                    dir_y = -(-rel_x * combined + rel_y * leg) / dist_sq
                dot2 = rvx * dir_x + rvy * dir_y
                u_x = dot2 * dir_x - rvx
                u_y = dot2 * dir_y - rvy
        else:
            # Already overlapping: resolve within one time step.
            wx = rvx - inv_step * rel_x
            wy = rvy - inv_step * rel_y
            w_len = math.hypot(wx, wy)
            if w_len < _EPS:
                # Coincident relative state; push along an arbitrary axis.
                ux, uy = 1.0, 0.0
            else:
                ux, uy = wx / w_len, wy / w_len
            dir_x, dir_y = uy, -ux
            u_x = (combined * inv_step - w_len) * ux
            u_y = (combined * inv_step - w_len) * uy

        lines.append(
            HalfPlane(
                self_agent.vx + 0.5 * u_x,
                self_agent.vy + 0.5 * u_y,
                dir_x,
                dir_y,
            )
        )
    return lines


def _lp1(
    lines: Sequence[HalfPlane],
    line_no: int,
    radius: float,
    opt_x: float,
    opt_y: float,
    direction_opt: bool,
) -> tuple[bool, float, float]:
    """Optimise along one constraint line, subject to all earlier lines."""
    line = lines[line_no]
    dot = line.px * line.dx + line.py * line.dy
    disc = dot * dot + radius * radius - (line.px * line.px + line.py * line.py)
    if disc < 0.0:
        return False, 0.0, 0.0
    sqrt_disc = math.sqrt(disc)
    t_left = -dot - sqrt_disc
    t_right = -dot + sqrt_disc

    for i in range(line_no):
        prev = lines[i]
        denom = _det(line.dx, line.dy, prev.dx, prev.dy)
        numer = _det(prev.dx, prev.dy, line.px - prev.px, line.py - prev.py)
        if abs(denom) <= _EPS:
            if numer < 0.0:
                return False, 0.0, 0.0
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, 0.0, 0.0

    if direction_opt:
        if opt_x * line.dx + opt_y * line.dy > 0.0:
            t = t_right
        else:
            t = t_left
    else:
        t = line.dx * (opt_x - line.px) + line.dy * (opt_y - line.py)
        t = min(t_right, max(t_left, t))
    return True, line.px + t * line.dx, line.py + t * line.dy


def _lp2(
    lines: Sequence[HalfPlane],
    radius: float,
    opt_x: float,
    opt_y: float,
    direction_opt: bool,
) -> tuple[int, float, float]:
    """Incremental 2-D program; returns (first failing line or len, velocity)."""
    if direction_opt:
        # opt vector treated as a unit direction.
        rx, ry = opt_x * radius, opt_y * radius
    elif opt_x * opt_x + opt_y * opt_y > radius * radius:
        norm = math.hypot(opt_x, opt_y)
        rx, ry = opt_x / norm * radius, opt_y / norm * radius
    else:
        rx, ry = opt_x, opt_y

    for i, line in enumerate(lines):
        if _det(line.dx, line.dy, line.px - rx, line.py - ry) > 0.0:
            ok, nx, ny = _lp1(lines, i, radius, opt_x, opt_y, direction_opt)
            if not ok:
                return i, rx, ry
            rx, ry = nx, ny
    return len(lines), rx, ry


def _lp3(
    lines: Sequence[HalfPlane],
    begin_line: int,
    radius: float,
    rx: float,
    ry: float,
) -> tuple[float, float]:
    """Infeasible fallback: minimise the largest constraint violation."""
    distance = 0.0
    for i in range(begin_line, len(lines)):
        line = lines[i]
        if _det(line.dx, line.dy, line.px - rx, line.py - ry) <= distance:
            continue
        proj: list[HalfPlane] = []
        for j in range(i):
            other = lines[j]
            denom = _det(line.dx, line.dy, other.dx, other.dy)
            if abs(denom) <= _EPS:
                if line.dx * other.dx + line.dy * other.dy > 0.0:
                    continue
                px = 0.5 * (line.px + other.px)
                py = 0.5 * (line.py + other.py)
            else:
                t = _det(other.dx, other.dy, line.px - other.px, line.py - other.py) / denom
                px = line.px + t * line.dx
                py = line.py + t * line.dy
            ddx = other.dx - line.dx
            ddy = other.dy - line.dy
            norm = math.hypot(ddx, ddy)
            proj.append(HalfPlane(px, py, ddx / norm, ddy / norm))
        fail, nx, ny = _lp2(proj, radius, -line.dy, line.dx, True)
        if fail >= len(proj):
            # A fully satisfying point may not exist due to rounding; keep
            # the previous result otherwise.
            rx, ry = nx, ny
        distance = _det(line.dx, line.dy, line.px - rx, line.py - ry)
    return rx, ry


def solve_velocity(
    lines: Sequence[HalfPlane],
    max_speed: float,
    pref_vx: float,
    pref_vy: float,
) -> tuple[tuple[float, float], bool]:
    """Velocity closest to the preferred one within all half-planes.

    Returns the velocity and whether the 2-D program was feasible (the
    collision-free guarantee only holds for feasible solves).
    """
    fail, vx, vy = _lp2(lines, max_speed, pref_vx, pref_vy, False)
    if fail < len(lines):
        vx, vy = _lp3(lines, fail, max_speed, vx, vy)
        return (vx, vy), False
    return (vx, vy), True


def preferred_velocity(
    position: tuple[float, float],
    goal: tuple[float, float],
    v_pref: float,
    arrive_within: float,
) -> tuple[float, float]:
    """Full speed towards the goal; zero once inside the arrival disc."""
    dx = goal[0] - position[0]
    dy = goal[1] - position[1]
    dist = math.hypot(dx, dy)
    if dist < arrive_within:
        return (0.0, 0.0)
    return (dx / dist * v_pref, dy / dist * v_pref)


def orca_velocity(
    self_agent: "AgentState",
    goal: tuple[float, float],
    v_pref: float,
    neighbors: Sequence["AgentState"],
    params: OrcaParams,
    arrive_within: float | None = None,
) -> tuple[float, float]:
    """One-step ORCA velocity for an agent heading to `goal`.

    `arrive_within` is the goal radius below which the preferred velocity
    becomes zero (defaults to the agent radius, parking it as a static
    obstacle).
    """
    if arrive_within is None:
        arrive_within = self_agent.r
    pref = preferred_velocity(
        (self_agent.px, self_agent.py), goal, v_pref, arrive_within
    )
    lines = orca_lines(self_agent, neighbors, params)
    (vx, vy), _ = solve_velocity(lines, params.max_speed, pref[0], pref[1])
    return (vx, vy)
