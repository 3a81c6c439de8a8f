"""Closed-form distance between two agents moving linearly over one step."""

from __future__ import annotations

import numpy as np


def interval_min_distance(
    robot_start: np.ndarray,
    robot_end: np.ndarray,
    human_start: np.ndarray,
    human_end: np.ndarray,
) -> float:
    """Minimum centre-to-centre distance over the step, both agents linear.

    The squared relative distance is quadratic in the interpolation
    parameter s in [0, 1]; its unconstrained minimiser is clamped to the
    endpoints.
    """
    d0 = np.asarray(human_start, dtype=float) - np.asarray(robot_start, dtype=float)
    d1 = np.asarray(human_end, dtype=float) - np.asarray(robot_end, dtype=float)
    w = d1 - d0
    ww = float(w @ w)
    if ww == 0.0:
        return float(np.hypot(d0[0], d0[1]))
    s = -float(d0 @ w) / ww
    s = min(1.0, max(0.0, s))
    closest = d0 + s * w
    return float(np.hypot(closest[0], closest[1]))
