"""Trajectory vectorization and the per-agent subgraph encoder.

Each agent's recent motion is a window of three segment vectors
``[p_prev, v, r, p_cur]`` (7 scalars). A shared three-layer network maps
the window to one 128-wide agent feature: every layer encodes each
vector (linear, layer norm, ReLU, width 64), max-pools across the
window, and concatenates the pooled summary back onto each vector.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

HISTORY_LEN = 3
VECTOR_WIDTH = 7
SUBGRAPH_HIDDEN = 64
AGENT_FEATURE_WIDTH = 2 * SUBGRAPH_HIDDEN
LAYER_NORM_EPS = 1e-5


# ---------------------------------------------------------------------------
# History vectors (numpy side, used by the simulator)


def vectorize_step(
    prev_pos: tuple[float, float] | np.ndarray,
    cur_pos: tuple[float, float] | np.ndarray,
    velocity: tuple[float, float] | np.ndarray,
    radius: float,
) -> np.ndarray:
    """One trajectory segment as ``[p_prev, v, r, p_cur]`` (7 scalars)."""
    prev_pos = np.asarray(prev_pos, dtype=float)
    cur_pos = np.asarray(cur_pos, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    return np.concatenate([prev_pos, velocity, [float(radius)], cur_pos])


def initial_history(pos: tuple[float, float] | np.ndarray, radius: float) -> np.ndarray:
    """Episode-start padding: three zero-displacement segments at `pos`."""
    vec = vectorize_step(pos, pos, (0.0, 0.0), radius)
    return np.tile(vec, (HISTORY_LEN, 1))


def push_history(history: np.ndarray, new_vector: np.ndarray) -> np.ndarray:
    """Append the newest segment, dropping the oldest; returns a new array."""
    return np.concatenate([history[1:], new_vector[None, :]], axis=0)


def translate_history(history: np.ndarray, origin: np.ndarray) -> np.ndarray:
    """Express all positions in a history window relative to `origin`.

    Applies to any (..., 3, 7) stack; velocity and radius are unchanged.
    """
    out = np.array(history, dtype=float)
    out[..., 0:2] -= origin
    out[..., 5:7] -= origin
    return out


# ---------------------------------------------------------------------------
# Subgraph network (torch side)


class SubgraphLayer(nn.Module):
    """Encode each history vector, pool across the window, concatenate."""

    def __init__(self, in_width: int, hidden: int = SUBGRAPH_HIDDEN) -> None:
        super().__init__()
        self.linear = nn.Linear(in_width, hidden)
        self.norm = nn.LayerNorm(hidden, eps=LAYER_NORM_EPS)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        """(..., 3, in_width) -> (..., 3, 2*hidden)."""
        # Flatten leading dims so the linear map takes the fast 2-D path.
        lead = features.shape[:-1]
        flat = features.reshape(-1, features.shape[-1])
        encoded = torch.relu(self.norm(self.linear(flat))).reshape(*lead, -1)
        pooled = encoded.max(dim=-2, keepdim=True).values
        pooled = pooled.expand(*encoded.shape[:-2], HISTORY_LEN, encoded.shape[-1])
        return torch.cat([encoded, pooled], dim=-1)


class SubgraphEncoder(nn.Module):
    """Three subgraph layers plus a final max-pool to one feature per agent.

    The same weights encode the robot and every human.
    """

    def __init__(self, hidden: int = SUBGRAPH_HIDDEN) -> None:
        super().__init__()
        self.layers = nn.ModuleList(
            [
                SubgraphLayer(VECTOR_WIDTH, hidden),
                SubgraphLayer(2 * hidden, hidden),
                SubgraphLayer(2 * hidden, hidden),
            ]
        )
        self.out_width = 2 * hidden

    def forward(self, histories: torch.Tensor) -> torch.Tensor:
        """(..., 3, 7) history windows -> (..., 2*hidden) agent features."""
        x = histories
        for layer in self.layers:
            x = layer(x)
        return x.max(dim=-2).values


def subgraph_layer(features: torch.Tensor, layer: SubgraphLayer) -> torch.Tensor:
    """Functional form of one layer pass; validates the input width."""
    if features.shape[-1] != layer.linear.in_features:
        raise ValueError(
            f"expected feature width {layer.linear.in_features}, got {features.shape[-1]}"
        )
    if features.shape[-2] != HISTORY_LEN:
        raise ValueError(f"expected {HISTORY_LEN} history vectors, got {features.shape[-2]}")
    return layer(features)


def encode_agents(histories: torch.Tensor, encoder: SubgraphEncoder) -> torch.Tensor:
    """Encode a stack of per-agent history windows with shared weights.

    `histories` is (n_agents, 3, 7) or any batched variant (..., 3, 7);
    positions are expected to be pre-translated to the robot frame.
    """
    return encoder(histories)
