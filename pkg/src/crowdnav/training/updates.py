"""Gradient updates: imitation pretraining, SAC, and selection TD learning.

The encoder trunk is shared. Critic and policy losses both update it
(configurable); the selection head learns on frozen features since it
plays an auxiliary role. Draw order from the torch generator is fixed
(critic target, policy sample, selection candidates) so runs replay
bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from ..actor import ActionDistribution, policy_forward, rsample_action, squash
from ..networks import AgentNetworks
from .replay import Transition


@dataclass
class Optimizers:
    il: torch.optim.Adam
    critic: torch.optim.Adam
    policy: torch.optim.Adam
    selection: torch.optim.Adam
    # Parameter lists, in optimizer order, for checkpointing.
    named: dict[str, list[tuple[str, torch.nn.Parameter]]]


def build_optimizers(
    nets: AgentNetworks,
    il_lr: float,
    rl_lr: float,
    trunk_updates: str = "both",
) -> Optimizers:
    if trunk_updates not in ("both", "critic"):
        raise ValueError(f"trunk_updates must be 'both' or 'critic', got {trunk_updates!r}")
    trunk = [("subgraph." + n, p) for n, p in nets.subgraph.named_parameters()]
    trunk += [("gnn." + n, p) for n, p in nets.gnn.named_parameters()]
    policy = [("policy." + n, p) for n, p in nets.policy.named_parameters()]
    critics = [("q1." + n, p) for n, p in nets.q1.named_parameters()]
    critics += [("q2." + n, p) for n, p in nets.q2.named_parameters()]
    selection = [("selection." + n, p) for n, p in nets.selection.named_parameters()]

    named = {
        "il": trunk + policy + critics + selection,
        "critic": trunk + critics,
        "policy": policy + (trunk if trunk_updates == "both" else []),
        "selection": selection,
    }
    return Optimizers(
        il=torch.optim.Adam([p for _, p in named["il"]], lr=il_lr),
        critic=torch.optim.Adam([p for _, p in named["critic"]], lr=rl_lr),
        policy=torch.optim.Adam([p for _, p in named["policy"]], lr=rl_lr),
        selection=torch.optim.Adam([p for _, p in named["selection"]], lr=rl_lr),
        named=named,
    )


def _stack_batch(transitions: Sequence[Transition], dtype: torch.dtype):
    states = [t.state for t in transitions]
    next_states = [t.next_state for t in transitions]
    actions = torch.as_tensor(np.array([t.action for t in transitions]), dtype=dtype)
    rewards = torch.as_tensor(np.array([t.reward for t in transitions]), dtype=dtype)
    dones = torch.as_tensor(
        np.array([float(t.done) for t in transitions]), dtype=dtype
    )
    return states, actions, rewards, next_states, dones


def project_disc_torch(actions: torch.Tensor, radius: float) -> torch.Tensor:
    """Differentiable (a.e.) projection onto the reachable disc."""
    norms = actions.norm(dim=-1, keepdim=True)
    factor = torch.where(norms > radius, radius / norms.clamp_min(1e-12), torch.ones_like(norms))
    return actions * factor


def imitation_update(
    nets: AgentNetworks,
    transitions: Sequence[Transition],
    returns: torch.Tensor,
    optimizer: torch.optim.Adam,
    action_scale: float,
) -> dict[str, float]:
    """One behaviour-cloning step on a demonstration batch.

    The policy regresses its squashed mean onto the demonstrated action;
    critics and the selection head regress onto the episode's observed
    discounted return.
    """
    states, actions, _, _, _ = _stack_batch(transitions, nets.dtype)
    features = nets.encode(states)
    mean, _ = nets.policy(features)
    policy_loss = ((squash(mean, action_scale) - actions) ** 2).mean()
    q1 = nets.q1(features, actions)
    q2 = nets.q2(features, actions)
    critic_loss = ((q1 - returns) ** 2).mean() + ((q2 - returns) ** 2).mean()
    selection_loss = ((nets.selection(features, actions) - returns) ** 2).mean()

    total = policy_loss + critic_loss + selection_loss
    nets.zero_grad(set_to_none=True)
    total.backward()
    optimizer.step()
    return {
        "policy_loss": float(policy_loss.detach()),
        "critic_loss": float(critic_loss.detach()),
        "selection_loss": float(selection_loss.detach()),
    }


def _soft_target(
    nets: AgentNetworks,
    rewards: torch.Tensor,
    dones: torch.Tensor,
    feat_next: torch.Tensor,
    dist: ActionDistribution,
    gamma: float,
    alpha: float,
    action_scale: float,
    generator: torch.Generator,
) -> torch.Tensor:
    a_next, logp_next = rsample_action(dist, action_scale, generator)
    a_next = project_disc_torch(a_next, action_scale)
    q_next = nets.q_value(feat_next, a_next, which="targets")
    return rewards + gamma * (1.0 - dones) * (q_next - alpha * logp_next)


def critic_targets(
    nets: AgentNetworks,
    rewards: torch.Tensor,
    next_states,
    dones: torch.Tensor,
    gamma: float,
    alpha: float,
    action_scale: float,
    generator: torch.Generator,
) -> torch.Tensor:
    """Soft Bellman target with a fresh squashed-policy sample at s'."""
    with torch.no_grad():
        feat_next = nets.encode(next_states)
        dist = policy_forward(nets, feat_next)
        return _soft_target(
            nets, rewards, dones, feat_next, dist, gamma, alpha, action_scale, generator
        )


def sac_update(
    nets: AgentNetworks,
    transitions: Sequence[Transition],
    opts: Optimizers,
    *,
    gamma: float,
    alpha: float,
    tau: float,
    action_scale: float,
    generator: torch.Generator,
) -> dict[str, float]:
    """One critic step, one policy step, then polyak on the critic targets."""
    states, actions, rewards, next_states, dones = _stack_batch(transitions, nets.dtype)

    y = critic_targets(
        nets, rewards, next_states, dones, gamma, alpha, action_scale, generator
    )
    features = nets.encode(states)
    q1 = nets.q1(features, actions)
    q2 = nets.q2(features, actions)
    critic_loss = ((q1 - y) ** 2).mean() + ((q2 - y) ** 2).mean()
    nets.zero_grad(set_to_none=True)
    critic_loss.backward()
    opts.critic.step()

    # Re-encode: the critic step just moved the trunk.
    features = nets.encode(states)
    dist = policy_forward(nets, features)
    a_new, logp = rsample_action(dist, action_scale, generator)
    a_new = project_disc_torch(a_new, action_scale)
    q_new = nets.q_value(features, a_new, which="online-min")
    policy_loss = (alpha * logp - q_new).mean()
    nets.zero_grad(set_to_none=True)
    policy_loss.backward()
    opts.policy.step()

    nets.polyak_critics(tau)
    return {
        "critic_loss": float(critic_loss.detach()),
        "policy_loss": float(policy_loss.detach()),
        "critic_target_mean": float(y.mean()),
    }


def sample_candidate_actions(
    dist: ActionDistribution, m: int, action_scale: float, generator: torch.Generator
) -> torch.Tensor:
    """(B, m, 2) squashed, disc-projected candidates from a batched distribution."""
    mean = dist.mean.unsqueeze(1)
    std = dist.std.unsqueeze(1)
    eps = torch.randn((mean.shape[0], m, 2), generator=generator, dtype=mean.dtype)
    return project_disc_torch(squash(mean + std * eps, action_scale), action_scale)


def _selection_td_target(
    nets: AgentNetworks,
    rewards: torch.Tensor,
    dones: torch.Tensor,
    feat_next: torch.Tensor,
    dist: ActionDistribution,
    gamma: float,
    m: int,
    action_scale: float,
    generator: torch.Generator,
) -> torch.Tensor:
    candidates = sample_candidate_actions(dist, m, action_scale, generator)
    batch, _, _ = candidates.shape
    flat_feat = feat_next.unsqueeze(1).expand(-1, m, -1).reshape(batch * m, -1)
    values = nets.q_value(
        flat_feat, candidates.reshape(batch * m, 2), which="selection"
    ).reshape(batch, m)
    best = values.argmax(dim=1)
    chosen = candidates[torch.arange(batch), best]
    q_next = nets.q_value(feat_next, chosen, which="selection-target")
    return rewards + gamma * (1.0 - dones) * q_next


def selection_targets(
    nets: AgentNetworks,
    rewards: torch.Tensor,
    next_states,
    dones: torch.Tensor,
    gamma: float,
    m: int,
    action_scale: float,
    generator: torch.Generator,
) -> torch.Tensor:
    """TD target through the selection pipeline at s'.

    The online selection head picks among m fresh policy samples; its
    target copy values the pick.
    """
    with torch.no_grad():
        feat_next = nets.encode(next_states)
        dist = policy_forward(nets, feat_next)
        return _selection_td_target(
            nets, rewards, dones, feat_next, dist, gamma, m, action_scale, generator
        )


def selection_update(
    nets: AgentNetworks,
    transitions: Sequence[Transition],
    opts: Optimizers,
    *,
    gamma: float,
    m: int,
    tau: float,
    action_scale: float,
    generator: torch.Generator,
) -> dict[str, float]:
    states, actions, rewards, next_states, dones = _stack_batch(transitions, nets.dtype)
    y = selection_targets(
        nets, rewards, next_states, dones, gamma, m, action_scale, generator
    )
    with torch.no_grad():
        features = nets.encode(states)
    q_sel = nets.selection(features, actions)
    loss = ((q_sel - y) ** 2).mean()
    nets.zero_grad(set_to_none=True)
    loss.backward()
    opts.selection.step()
    nets.polyak_selection(tau)
    return {"selection_loss": float(loss.detach())}


def rl_update(
    nets: AgentNetworks,
    transitions: Sequence[Transition],
    opts: Optimizers,
    *,
    gamma: float,
    alpha: float,
    tau: float,
    m: int,
    action_scale: float,
    generator: torch.Generator,
) -> dict[str, float]:
    """Full per-step update: critic, policy and selection on one batch.

    Both TD targets are computed up front from a single next-state
    encode of the pre-update networks (there is no target copy of the
    trunk, so this also keeps the two targets mutually consistent);
    then the critic, policy and selection steps run in that order.
    """
    states, actions, rewards, next_states, dones = _stack_batch(transitions, nets.dtype)

    with torch.no_grad():
        feat_next = nets.encode(next_states)
        dist_next = policy_forward(nets, feat_next)
        y_q = _soft_target(
            nets, rewards, dones, feat_next, dist_next, gamma, alpha,
            action_scale, generator,
        )
        y_sel = _selection_td_target(
            nets, rewards, dones, feat_next, dist_next, gamma, m,
            action_scale, generator,
        )

    features = nets.encode(states)
    q1 = nets.q1(features, actions)
    q2 = nets.q2(features, actions)
    critic_loss = ((q1 - y_q) ** 2).mean() + ((q2 - y_q) ** 2).mean()
    nets.zero_grad(set_to_none=True)
    critic_loss.backward()
    opts.critic.step()

    # Re-encode: the critic step just moved the trunk.
    features = nets.encode(states)
    dist = policy_forward(nets, features)
    a_new, logp = rsample_action(dist, action_scale, generator)
    a_new = project_disc_torch(a_new, action_scale)
    q_new = nets.q_value(features, a_new, which="online-min")
    policy_loss = (alpha * logp - q_new).mean()
    nets.zero_grad(set_to_none=True)
    policy_loss.backward()
    opts.policy.step()

    q_sel = nets.selection(features.detach(), actions)
    selection_loss = ((q_sel - y_sel) ** 2).mean()
    nets.zero_grad(set_to_none=True)
    selection_loss.backward()
    opts.selection.step()

    nets.polyak_critics(tau)
    nets.polyak_selection(tau)
    return {
        "critic_loss": float(critic_loss.detach()),
        "policy_loss": float(policy_loss.detach()),
        "selection_loss": float(selection_loss.detach()),
        "critic_target_mean": float(y_q.mean()),
    }
