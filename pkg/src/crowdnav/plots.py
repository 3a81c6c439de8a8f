"""Static figure emitters: trajectories, attention snapshots, sampled points."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle

from .simulation.trace import EpisodeTrace

RENDER_KINDS = ("trajectory", "attention", "samples")

ROBOT_COLOR = "gold"
HUMAN_CMAP = "tab10"


class MissingChannelError(ValueError):
    """The trace lacks the per-step channel a plot kind requires."""


def render_artifacts(
    trace: EpisodeTrace,
    kind: str,
    out_path: str | Path,
    step_index: int | None = None,
) -> dict:
    """Write one figure; returns a small summary of what was drawn.

    `step_index` picks the snapshot for attention/samples plots (defaults
    to the step with the most crowded surroundings, i.e. mid-episode).
    """
    if kind not in RENDER_KINDS:
        raise ValueError(f"unknown render kind {kind!r}; expected one of {RENDER_KINDS}")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if kind == "trajectory":
        return _render_trajectory(trace, out_path)
    if kind == "attention":
        return _render_attention(trace, out_path, step_index)
    return _render_samples(trace, out_path, step_index)


def _new_axes():
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.set_xlim(-5.2, 5.2)
    ax.set_ylim(-5.2, 5.2)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    return fig, ax


def _render_trajectory(trace: EpisodeTrace, out_path: Path) -> dict:
    fig, ax = _new_axes()
    robot = trace.robot_path()
    humans = trace.human_paths()
    times = [s.t for s in trace.steps]
    colors = matplotlib.colormaps[HUMAN_CMAP]

    ax.plot(robot[:, 0], robot[:, 1], color=ROBOT_COLOR, linewidth=3, zorder=3,
            label="robot")
    for i in range(trace.n_humans):
        ax.plot(humans[:, i, 0], humans[:, i, 1], color=colors(i % 10), linewidth=1)

    # Time-stamped positions every few seconds.
    stamp_every = max(1, int(round(4.0 / trace.dt)))
    for k in range(0, len(trace.steps), stamp_every):
        ax.add_patch(
            Circle(robot[k], trace.robot_radius, color=ROBOT_COLOR, alpha=0.6, zorder=3)
        )
        ax.annotate(f"{times[k]:.1f}", robot[k], fontsize=7, zorder=4)
        for i in range(trace.n_humans):
            ax.add_patch(
                Circle(humans[k, i], trace.human_radii[i], fill=False,
                       color=colors(i % 10), alpha=0.7)
            )
            ax.annotate(f"{times[k]:.1f}", humans[k, i], fontsize=6)

    ax.plot(*trace.goal, marker="*", markersize=14, color="red", label="goal")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return {"path": str(out_path), "n_steps": len(trace.steps)}


def _pick_step(trace: EpisodeTrace, channel: dict, step_index: int | None, kind: str) -> int:
    if not channel:
        raise MissingChannelError(
            f"trace has no {kind} channel; re-run the episode with a policy "
            "that records per-step diagnostics"
        )
    if step_index is None:
        keys = sorted(channel)
        return keys[len(keys) // 2]
    if step_index not in channel:
        raise MissingChannelError(f"no {kind} record at step {step_index}")
    return step_index


def _render_attention(trace: EpisodeTrace, out_path: Path, step_index: int | None) -> dict:
    step_index = _pick_step(trace, trace.attention, step_index, "attention")
    weights = trace.attention[step_index][0]  # robot row: robot + n humans
    state = trace.steps[step_index]

    fig, ax = _new_axes()
    ax.set_title(f"attention at t={state.t:.2f}s")
    robot_xy = np.array(state.robot_pose[:2])
    ax.add_patch(Circle(robot_xy, trace.robot_radius, color=ROBOT_COLOR, zorder=3))
    ax.annotate("robot", robot_xy + 0.1, fontsize=8)

    scores = {"robot": float(weights[0])}
    for i, pose in enumerate(state.human_poses):
        xy = np.array(pose[:2])
        shade = matplotlib.colormaps["Blues"](0.2 + 0.8 * float(weights[1 + i]) / max(weights.max(), 1e-12))
        ax.add_patch(Circle(xy, trace.human_radii[i], color=shade, zorder=2))
        ax.annotate(f"{i}:{weights[1 + i]:.2f}", xy + 0.1, fontsize=8)
        scores[f"human_{i}"] = float(weights[1 + i])

    lines = [f"robot {weights[0]:.3f}"] + [
        f"human {i} {weights[1 + i]:.3f}" for i in range(trace.n_humans)
    ]
    ax.text(
        0.02, 0.98, "\n".join(lines), transform=ax.transAxes,
        va="top", fontsize=8, family="monospace",
    )
    ax.plot(*trace.goal, marker="*", markersize=14, color="red")
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return {"path": str(out_path), "step": step_index, "weights": scores}


def _render_samples(trace: EpisodeTrace, out_path: Path, step_index: int | None) -> dict:
    step_index = _pick_step(trace, trace.candidates, step_index, "candidate")
    candidates, selected = trace.candidates[step_index]
    state = trace.steps[step_index]
    robot_xy = np.array(state.robot_pose[:2])

    fig, ax = _new_axes()
    ax.set_title(f"sampled position points at t={state.t:.2f}s")
    ax.add_patch(Circle(robot_xy, trace.robot_radius, color=ROBOT_COLOR, zorder=3))
    for i, pose in enumerate(state.human_poses):
        ax.add_patch(
            Circle(np.array(pose[:2]), trace.human_radii[i], fill=False, color="gray")
        )
    for idx, offset in enumerate(np.asarray(candidates)):
        point = robot_xy + offset
        is_pick = idx == selected
        ax.plot(
            *point,
            marker="o",
            markersize=10 if is_pick else 7,
            color="red" if is_pick else "steelblue",
            zorder=4,
        )
        ax.annotate(str(idx + 1), point + 0.06, fontsize=8)
    ax.plot(
        [robot_xy[0], robot_xy[0] + candidates[selected][0]],
        [robot_xy[1], robot_xy[1] + candidates[selected][1]],
        linestyle="--", color="red", zorder=3,
    )
    ax.plot(*trace.goal, marker="*", markersize=14, color="red")
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return {
        "path": str(out_path),
        "step": step_index,
        "n_candidates": int(np.asarray(candidates).shape[0]),
        "selected": int(selected),
    }
