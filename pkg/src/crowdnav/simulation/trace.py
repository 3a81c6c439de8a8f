"""Line-oriented episode traces for plotting and regression fixtures.

Format, one record per line, space separated, `repr` floats so files
round-trip bit-exactly:

    # crowdnav-trace v1
    # meta key=value ...
    S t rx ry rvx rvy [hx hy hvx hvy]*n reward event
    A step w00 w01 ... (row-major (n+1)^2 attention matrix)
    C step ax ay ... (m candidate displacements) selected_index

The first S line is the initial state (t=0, reward 0, event "init").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HEADER = "# crowdnav-trace v1"


@dataclass
class TraceStep:
    t: float
    robot_pose: tuple[float, float, float, float]  # px py vx vy
    human_poses: tuple[tuple[float, float, float, float], ...]
    reward: float
    event: str


@dataclass
class EpisodeTrace:
    n_humans: int
    dt: float
    robot_radius: float
    human_radii: tuple[float, ...]
    goal: tuple[float, float]
    scenario_seed: int | None = None
    steps: list[TraceStep] = field(default_factory=list)
    attention: dict[int, np.ndarray] = field(default_factory=dict)
    candidates: dict[int, tuple[np.ndarray, int]] = field(default_factory=dict)

    def robot_path(self) -> np.ndarray:
        return np.array([[s.robot_pose[0], s.robot_pose[1]] for s in self.steps])

    def human_paths(self) -> np.ndarray:
        """(n_steps, n_humans, 2) positions."""
        return np.array(
            [[[p[0], p[1]] for p in s.human_poses] for s in self.steps]
        ).reshape(len(self.steps), self.n_humans, 2)


def write_trace(trace: EpisodeTrace, path: str | Path) -> None:
    path = Path(path)
    lines = [HEADER]
    radii = ",".join(repr(float(r)) for r in trace.human_radii)
    seed_part = "" if trace.scenario_seed is None else f" seed={trace.scenario_seed}"
    lines.append(
        f"# meta n_humans={trace.n_humans} dt={float(trace.dt)!r} "
        f"robot_radius={float(trace.robot_radius)!r} human_radii={radii} "
        f"goal={float(trace.goal[0])!r},{float(trace.goal[1])!r}{seed_part}"
    )
    for step in trace.steps:
        fields = [repr(float(step.t))]
        fields += [repr(float(v)) for v in step.robot_pose]
        for pose in step.human_poses:
            fields += [repr(float(v)) for v in pose]
        fields.append(repr(float(step.reward)))
        fields.append(step.event)
        lines.append("S " + " ".join(fields))
    for idx in sorted(trace.attention):
        flat = " ".join(repr(float(v)) for v in trace.attention[idx].ravel())
        lines.append(f"A {idx} {flat}")
    for idx in sorted(trace.candidates):
        cands, selected = trace.candidates[idx]
        flat = " ".join(repr(float(v)) for v in np.asarray(cands).ravel())
        lines.append(f"C {idx} {flat} {int(selected)}")
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def read_trace(path: str | Path) -> EpisodeTrace:
    text = Path(path).read_text().splitlines()
    if not text or text[0] != HEADER:
        raise ValueError(f"{path}: not a crowdnav trace file")
    meta: dict[str, str] = {}
    for line in text:
        if line.startswith("# meta "):
            for token in line[len("# meta "):].split():
                key, _, value = token.partition("=")
                meta[key] = value
    n_humans = int(meta["n_humans"])
    goal_x, goal_y = (float(v) for v in meta["goal"].split(","))
    trace = EpisodeTrace(
        n_humans=n_humans,
        dt=float(meta["dt"]),
        robot_radius=float(meta["robot_radius"]),
        human_radii=tuple(float(v) for v in meta["human_radii"].split(",")),
        goal=(goal_x, goal_y),
        scenario_seed=int(meta["seed"]) if "seed" in meta else None,
    )
    n_nodes = n_humans + 1
    for line in text:
        if line.startswith("S "):
            fields = line[2:].split()
            t = float(fields[0])
            robot = tuple(float(v) for v in fields[1:5])
            humans = tuple(
                tuple(float(v) for v in fields[5 + 4 * i : 9 + 4 * i])
                for i in range(n_humans)
            )
            reward = float(fields[5 + 4 * n_humans])
            event = fields[6 + 4 * n_humans]
            trace.steps.append(TraceStep(t, robot, humans, reward, event))
        elif line.startswith("A "):
            fields = line[2:].split()
            idx = int(fields[0])
            values = np.array([float(v) for v in fields[1:]])
            trace.attention[idx] = values.reshape(n_nodes, n_nodes)
        elif line.startswith("C "):
            fields = line[2:].split()
            idx = int(fields[0])
            selected = int(fields[-1])
            values = np.array([float(v) for v in fields[1:-1]])
            trace.candidates[idx] = (values.reshape(-1, 2), selected)
    return trace
