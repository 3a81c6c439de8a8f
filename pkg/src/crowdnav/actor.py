"""Stochastic displacement policy and the action-selection module.

Actions are sampled as a tanh-squashed Gaussian scaled to the per-step
displacement budget (v_pref * dt), then projected onto the reachable
disc. At decision time the policy proposes m candidates and the
selection head executes the one with the highest learned value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .networks import AgentNetworks
from .simulation.agents import Action
from .simulation.env import EnvState, joint_state

_LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class ActionDistribution:
    """Pre-squash Gaussian over displacements; tensors are (..., 2)."""

    mean: torch.Tensor
    log_std: torch.Tensor

    @property
    def std(self) -> torch.Tensor:
        return self.log_std.exp()


@dataclass(frozen=True)
class ActInfo:
    """Per-decision diagnostics captured for traces and plots."""

    attention: np.ndarray  # (n+1, n+1)
    candidates: np.ndarray  # (m, 2)
    selected_index: int
    selection_values: np.ndarray  # (m,)


def policy_forward(nets: AgentNetworks, feature: torch.Tensor) -> ActionDistribution:
    mean, log_std = nets.policy(feature)
    return ActionDistribution(mean=mean, log_std=log_std)


def squash(z: torch.Tensor, scale: float) -> torch.Tensor:
    return torch.tanh(z) * scale

def _log1m_tanh_sq(z: torch.Tensor) -> torch.Tensor:
    # log(1 - tanh(z)^2) in a form stable for large |z|.
    return 2.0 * (_LOG2 - z - torch.nn.functional.softplus(-2.0 * z))


def squashed_log_prob(
    dist: ActionDistribution, z: torch.Tensor, scale: float
) -> torch.Tensor:
    """Density of a = tanh(z) * scale with the change-of-variables terms."""
    gauss = (
        -0.5 * (((z - dist.mean) / dist.std) ** 2)
        - dist.log_std
        - 0.5 * float(np.log(2.0 * np.pi))
    )
    correction = _log1m_tanh_sq(z) + float(np.log(scale))
    return (gauss - correction).sum(dim=-1)


def rsample_action(
    dist: ActionDistribution, scale: float, generator: torch.Generator
) -> tuple[torch.Tensor, torch.Tensor]:
    """Reparameterised sample and its log-density (both differentiable)."""
    eps = torch.randn(dist.mean.shape, generator=generator, dtype=dist.mean.dtype)
    z = dist.mean + dist.std * eps
    return squash(z, scale), squashed_log_prob(dist, z, scale)


def project_to_disc(action: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.hypot(action[0], action[1]))
    if norm > radius:
        return action * (radius / norm)
    return action


def sample_action_set(
    dist: ActionDistribution,
    m: int,
    generator: torch.Generator,
    scale: float,
    deterministic: bool = False,
) -> list[Action]:
    """m candidate displacements from the policy distribution.

    Deterministic mode replicates the squashed mean instead of drawing.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    mean = dist.mean.reshape(-1)
    if deterministic:
        samples = squash(mean, scale).expand(m, 2)
    else:
        eps = torch.randn((m, 2), generator=generator, dtype=mean.dtype)
        samples = squash(mean + dist.std.reshape(-1) * eps, scale)
    actions = []
    # Project in float64 regardless of network dtype so the executed
    # action respects the displacement bound exactly.
    for row in samples.detach().numpy().astype(np.float64):
        projected = project_to_disc(row, scale)
        actions.append(Action(float(projected[0]), float(projected[1])))
    return actions


def select_action(
    nets: AgentNetworks, feature: torch.Tensor, candidates: list[Action]
) -> tuple[Action, int, np.ndarray]:
    """Candidate with the highest selection value; first index wins ties."""
    if not candidates:
        raise ValueError("candidate list is empty")
    feature = feature.reshape(1, -1)
    with torch.no_grad():
        actions = torch.as_tensor(
            np.array([[a.dx, a.dy] for a in candidates]), dtype=feature.dtype
        )
        values = nets.q_value(
            feature.expand(len(candidates), -1), actions, which="selection"
        ).numpy()
    index = int(np.argmax(values))
    return candidates[index], index, values


def act(
    state: EnvState,
    nets: AgentNetworks,
    dt: float,
    m: int,
    generator: torch.Generator,
    deterministic: bool = False,
) -> Action:
    """Encode, sample m candidates, execute the selection-module choice."""
    action, _ = act_verbose(state, nets, dt, m, generator, deterministic)
    return action


def act_verbose(
    state: EnvState,
    nets: AgentNetworks,
    dt: float,
    m: int,
    generator: torch.Generator,
    deterministic: bool = False,
) -> tuple[Action, ActInfo]:
    if state.done:
        raise RuntimeError("cannot act on a finished episode")
    scale = state.robot.v_pref * dt
    with torch.no_grad():
        feature, attention = nets.encode_with_attention([joint_state(state)])
        dist = policy_forward(nets, feature[0])
        candidates = sample_action_set(dist, m, generator, scale, deterministic)
    action, index, values = select_action(nets, feature, candidates)
    info = ActInfo(
        attention=attention[0].numpy(),
        candidates=np.array([[a.dx, a.dy] for a in candidates]),
        selected_index=index,
        selection_values=values,
    )
    return action, info
