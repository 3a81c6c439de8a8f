"""Shared test utilities: gradient checks and joint-state builders."""

import numpy as np
import torch

from crowdnav.networks import DTYPE
from crowdnav.simulation.env import JointState


def directional_gradient_check(
    loss_fn, params, n_directions=20, eps=1e-5, rtol=1e-4, seed=0
):
    """Compare analytic directional derivatives against central differences.

    `loss_fn` must be a zero-argument callable returning a scalar tensor
    computed from `params`; evaluation happens at the current parameter
    values, which are restored after each probe.
    """
    params = [p for p in params if p.requires_grad]
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    flat_grad = torch.cat(
        [
            (g if g is not None else torch.zeros_like(p)).reshape(-1)
            for g, p in zip(grads, params)
        ]
    )
    gen = torch.Generator()
    gen.manual_seed(seed)
    worst = 0.0
    for _ in range(n_directions):
        direction = [
            torch.randn(p.shape, generator=gen, dtype=DTYPE) for p in params
        ]
        flat_dir = torch.cat([d.reshape(-1) for d in direction])
        flat_dir /= flat_dir.norm()
        offset = 0
        for d in direction:
            d.copy_(flat_dir[offset : offset + d.numel()].reshape(d.shape))
            offset += d.numel()

        analytic = float(flat_grad @ flat_dir)
        with torch.no_grad():
            for p, d in zip(params, direction):
                p.add_(eps * d)
            loss_plus = float(loss_fn())
            for p, d in zip(params, direction):
                p.sub_(2.0 * eps * d)
            loss_minus = float(loss_fn())
            for p, d in zip(params, direction):
                p.add_(eps * d)
        numeric = (loss_plus - loss_minus) / (2.0 * eps)
        scale = max(abs(analytic), abs(numeric), 1e-8)
        rel = abs(analytic - numeric) / scale
        worst = max(worst, rel)
        assert rel < rtol, f"directional derivative mismatch: {analytic} vs {numeric}"
    return worst


def random_history(rng, n_vectors=3, radius=0.3, speed=1.0, dt=0.25):
    """A chained history window with speed-consistent segments."""
    pos = rng.uniform(-4, 4, 2)
    vectors = []
    for _ in range(n_vectors):
        v = rng.uniform(-speed, speed, 2)
        v *= min(1.0, speed / max(np.linalg.norm(v), 1e-9))
        new_pos = pos + v * dt
        vectors.append(np.concatenate([pos, v, [radius], new_pos]))
        pos = new_pos
    return np.array(vectors)


def random_joint_state(rng, n_humans=5):
    return JointState(
        robot_history=random_history(rng),
        human_histories=np.stack([random_history(rng) for _ in range(n_humans)]),
        goal=rng.uniform(-4, 4, 2),
        v_pref=1.0,
    )
