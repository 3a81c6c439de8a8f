"""Single-layer self-attention over the agent graph.

Node features (robot row 0, humans after) are projected to queries,
keys and values; the scaled-dot-product softmax is the learned adjacency
matrix. The robot's output row, concatenated with its goal offset and
preferred speed, is the feature consumed by the policy and critics.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .encoding import AGENT_FEATURE_WIDTH

ROBOT_FEATURE_WIDTH = AGENT_FEATURE_WIDTH + 3


class InteractionGnn(nn.Module):
    """Q/K/V projections without bias; one layer, shared across crowd sizes."""

    def __init__(self, width: int = AGENT_FEATURE_WIDTH) -> None:
        super().__init__()
        self.width = width
        self.query = nn.Linear(width, width, bias=False)
        self.key = nn.Linear(width, width, bias=False)
        self.value = nn.Linear(width, width, bias=False)

    def _project(self, linear: nn.Linear, nodes: torch.Tensor) -> torch.Tensor:
        flat = nodes.reshape(-1, nodes.shape[-1])
        return linear(flat).reshape(nodes.shape)

    def attention_weights(self, nodes: torch.Tensor) -> torch.Tensor:
        """Row-stochastic adjacency: softmax of QK^T / sqrt(d_k).

        `nodes` is (..., n+1, width); rows index the attending agent.
        """
        q = self._project(self.query, nodes)
        k = self._project(self.key, nodes)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.width)
        return torch.softmax(scores, dim=-1)

    def forward(self, nodes: torch.Tensor) -> torch.Tensor:
        """ReLU(A · V); output width equals input width."""
        weights = self.attention_weights(nodes)
        return torch.relu(weights @ self._project(self.value, nodes))


def attention_weights(nodes: torch.Tensor, gnn: InteractionGnn) -> torch.Tensor:
    if nodes.shape[-1] != gnn.width:
        raise ValueError(f"expected node width {gnn.width}, got {nodes.shape[-1]}")
    return gnn.attention_weights(nodes)


def gnn_layer(nodes: torch.Tensor, gnn: InteractionGnn) -> torch.Tensor:
    if nodes.shape[-1] != gnn.width:
        raise ValueError(f"expected node width {gnn.width}, got {nodes.shape[-1]}")
    return gnn(nodes)


def robot_feature(
    nodes_out: torch.Tensor, goal: torch.Tensor, v_pref: torch.Tensor
) -> torch.Tensor:
    """Concatenate the robot row with its hidden state.

    `nodes_out` is (..., n+1, width), `goal` (..., 2) relative to the
    robot's current position, `v_pref` (...,). Returns (..., width+3).
    """
    robot_row = nodes_out[..., 0, :]
    return torch.cat([robot_row, goal, v_pref.unsqueeze(-1)], dim=-1)
