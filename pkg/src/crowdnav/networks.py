"""Network stack: shared encoder trunk, policy, twin critics, selection head.

Everything runs in float64 on CPU; the models are small enough that the
precision costs nothing and it keeps gradient checks and checkpoint
round-trips exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .encoding import SubgraphEncoder
from .interaction import InteractionGnn, robot_feature
from .simulation.env import JointState

DTYPE = torch.float64

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0


@dataclass(frozen=True)
class NetworkWidths:
    subgraph_hidden: int = 64
    gnn_width: int = 128
    policy_hidden: tuple[int, ...] = (256, 256, 256)
    critic_hidden: tuple[int, ...] = (256, 256, 256)
    selection_hidden: tuple[int, ...] = (256, 256)

    def __post_init__(self) -> None:
        if self.gnn_width != 2 * self.subgraph_hidden:
            raise ValueError(
                "gnn_width must equal 2*subgraph_hidden "
                f"(got {self.gnn_width} vs 2*{self.subgraph_hidden})"
            )
        for name in ("policy_hidden", "critic_hidden", "selection_hidden"):
            if any(w <= 0 for w in getattr(self, name)):
                raise ValueError(f"{name} must be positive")


def _mlp(in_width: int, hidden: Sequence[int], out_width: int) -> nn.Sequential:
    layers: list[nn.Module] = []
    width = in_width
    for h in hidden:
        layers += [nn.Linear(width, h), nn.ReLU()]
        width = h
    layers.append(nn.Linear(width, out_width))
    return nn.Sequential(*layers)


class PolicyHead(nn.Module):
    """Maps the robot feature to the pre-squash Gaussian (mean, log_std)."""

    def __init__(self, in_width: int, hidden: Sequence[int]) -> None:
        super().__init__()
        self.net = _mlp(in_width, hidden, 4)

    def forward(self, feature: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        out = self.net(feature)
        mean = out[..., :2]
        log_std = out[..., 2:].clamp(LOG_STD_MIN, LOG_STD_MAX)
        return mean, log_std


class QHead(nn.Module):
    """State-action value on (robot feature, displacement action)."""

    def __init__(self, in_width: int, hidden: Sequence[int]) -> None:
        super().__init__()
        self.net = _mlp(in_width + 2, hidden, 1)

    def forward(self, feature: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([feature, action], dim=-1)).squeeze(-1)


class AgentNetworks(nn.Module):
    """Trunk (subgraph + interaction GNN) with policy, critic and selection heads.

    Target copies of the critics and the selection head start equal to
    the online networks and track them by polyak averaging. `dtype`
    trades precision for speed: float64 keeps numerical checks exact,
    float32 roughly halves training cost.
    """

    def __init__(
        self, widths: NetworkWidths = NetworkWidths(), dtype: torch.dtype = DTYPE
    ) -> None:
        super().__init__()
        self.widths = widths
        self.dtype = dtype
        self.subgraph = SubgraphEncoder(widths.subgraph_hidden)
        self.gnn = InteractionGnn(widths.gnn_width)
        feature_width = widths.gnn_width + 3
        self.feature_width = feature_width
        self.policy = PolicyHead(feature_width, widths.policy_hidden)
        self.q1 = QHead(feature_width, widths.critic_hidden)
        self.q2 = QHead(feature_width, widths.critic_hidden)
        self.q1_target = QHead(feature_width, widths.critic_hidden)
        self.q2_target = QHead(feature_width, widths.critic_hidden)
        self.selection = QHead(feature_width, widths.selection_hidden)
        self.selection_target = QHead(feature_width, widths.selection_hidden)
        self.to(dtype)
        for p in self._target_modules():
            for param in p.parameters():
                param.requires_grad_(False)

    def _target_modules(self) -> tuple[nn.Module, ...]:
        return (self.q1_target, self.q2_target, self.selection_target)

    def sync_targets(self) -> None:
        """Copy online critic/selection weights into their targets."""
        with torch.no_grad():
            _copy_params(self.q1, self.q1_target)
            _copy_params(self.q2, self.q2_target)
            _copy_params(self.selection, self.selection_target)

    def polyak_critics(self, tau: float) -> None:
        polyak_update(self.q1, self.q1_target, tau)
        polyak_update(self.q2, self.q2_target, tau)

    def polyak_selection(self, tau: float) -> None:
        polyak_update(self.selection, self.selection_target, tau)

    # ---- forward paths ----

    def encode(self, joints: Sequence[JointState]) -> torch.Tensor:
        """Joint states -> robot features (B, feature_width).

        Positions are translated to each robot's current frame before
        encoding; mixed crowd sizes are bucketed and re-scattered.
        """
        by_n: dict[int, list[int]] = {}
        for idx, js in enumerate(joints):
            by_n.setdefault(js.human_histories.shape[0], []).append(idx)
        out = torch.empty((len(joints), self.feature_width), dtype=self.dtype)
        for indices in by_n.values():
            out[indices] = self._encode_uniform([joints[i] for i in indices])
        return out

    def encode_with_attention(
        self, joints: Sequence[JointState]
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Like `encode`, also returning the (B, n+1, n+1) attention matrices.

        Requires a uniform crowd size across the batch.
        """
        sizes = {js.human_histories.shape[0] for js in joints}
        if len(sizes) != 1:
            raise ValueError("attention capture requires a uniform crowd size")
        return self._encode_uniform(joints, with_attention=True)

    def _encode_uniform(
        self, joints: Sequence[JointState], with_attention: bool = False
    ):
        batch = len(joints)
        n_agents = joints[0].human_histories.shape[0] + 1
        histories = np.empty((batch, n_agents, 3, 7))
        goals = np.empty((batch, 2))
        v_pref = np.empty(batch)
        for i, js in enumerate(joints):
            histories[i, 0] = js.robot_history
            histories[i, 1:] = js.human_histories
            goals[i] = js.goal
            v_pref[i] = js.v_pref
        robot_pos = histories[:, 0, -1, 5:7].copy()
        histories[..., 0:2] -= robot_pos[:, None, None, :]
        histories[..., 5:7] -= robot_pos[:, None, None, :]
        goals -= robot_pos

        flat = torch.as_tensor(histories, dtype=self.dtype).reshape(batch * n_agents, 3, 7)
        nodes = self.subgraph(flat).reshape(batch, n_agents, -1)
        attention = self.gnn.attention_weights(nodes)
        nodes = torch.relu(attention @ self.gnn._project(self.gnn.value, nodes))
        feature = robot_feature(
            nodes,
            torch.as_tensor(goals, dtype=self.dtype),
            torch.as_tensor(v_pref, dtype=self.dtype),
        )
        if with_attention:
            return feature, attention
        return feature

    def q_value(
        self, feature: torch.Tensor, action: torch.Tensor, which: str = "online-min"
    ) -> torch.Tensor:
        """Scalar value estimates; `which` picks the estimator family."""
        if which == "online-min":
            return torch.minimum(self.q1(feature, action), self.q2(feature, action))
        if which == "targets":
            return torch.minimum(
                self.q1_target(feature, action), self.q2_target(feature, action)
            )
        if which == "selection":
            return self.selection(feature, action)
        if which == "selection-target":
            return self.selection_target(feature, action)
        raise ValueError(f"unknown estimator {which!r}")


def _copy_params(src: nn.Module, dst: nn.Module) -> None:
    for p_src, p_dst in zip(src.parameters(), dst.parameters()):
        p_dst.copy_(p_src)
    for b_src, b_dst in zip(src.buffers(), dst.buffers()):
        b_dst.copy_(b_src)


def polyak_update(online: nn.Module, target: nn.Module, tau: float) -> None:
    """target <- (1 - tau) * target + tau * online, exactly this expression."""
    with torch.no_grad():
        for p_o, p_t in zip(online.parameters(), target.parameters()):
            p_t.copy_(p_t * (1.0 - tau) + p_o * tau)


def init_networks(nets: AgentNetworks, generator: torch.Generator) -> AgentNetworks:
    """Deterministically initialise all linear layers from `generator`.

    Uses the standard fan-in uniform bounds so behaviour matches default
    initialisation, but draws from an explicit, checkpointable stream.
    Targets are synced to the online networks afterwards.
    """
    with torch.no_grad():
        for module in nets.modules():
            if isinstance(module, nn.Linear):
                bound = 1.0 / math.sqrt(module.in_features)
                module.weight.uniform_(-bound, bound, generator=generator)
                if module.bias is not None:
                    module.bias.uniform_(-bound, bound, generator=generator)
    nets.sync_targets()
    return nets
