"""End-to-end training: ORCA demonstrations, imitation warm start, then
off-policy updates with the selection head learning alongside SAC.

All randomness flows from the config seed through named streams, and
checkpoints capture networks, optimizer moments, RNG states and the
replay buffer, so a resumed run is bit-identical to an uninterrupted one.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import torch

from ..actor import act
from ..checkpoint import (
    CheckpointError,
    load_checkpoint,
    load_network_arrays,
    load_optimizer_arrays,
    network_arrays,
    optimizer_arrays,
    save_checkpoint,
)
from ..config import RunConfig, config_to_dict, write_config
from ..evaluation import evaluate_suite
from ..networks import AgentNetworks, init_networks
from ..policies import NetworkPolicy
from ..seeding import derive_seed
from ..simulation.env import CrowdEnv, JointState, joint_state
from ..simulation.reward import EventKind
from ..simulation.scenario import make_scenario
from .demos import generate_demonstrations
from .replay import ReplayBuffer, Transition
from .updates import build_optimizers, imitation_update, rl_update

RL_SCENARIO_STREAM = 2
NP_STREAM = 3
TORCH_STREAM = 4

LOG_COLUMNS = [
    "episode",
    "stage",
    "return",
    "outcome",
    "steps",
    "policy_loss",
    "critic_loss",
    "selection_loss",
    "buffer_size",
]

_OUTCOME = {
    EventKind.REACHED_GOAL: "success",
    EventKind.COLLISION: "collision",
    EventKind.TIMEOUT: "timeout",
}


class Trainer:
    """Owns the networks, optimizers, buffer and RNG streams for one run."""

    def __init__(
        self,
        config: RunConfig,
        out_dir: str | Path | None = None,
        resume_from: str | Path | None = None,
    ) -> None:
        torch.set_num_threads(config.torch_threads)
        self.config = config
        self.out_dir = Path(out_dir if out_dir is not None else config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "checkpoints").mkdir(exist_ok=True)
        write_config(config, self.out_dir / "config.cfg")

        self.env = CrowdEnv(config.env_params(robot_visible=False))
        self.nets = AgentNetworks(config.network_widths(), dtype=config.torch_dtype())
        self.opts = build_optimizers(
            self.nets, config.il_lr, config.rl_lr, config.trunk_updates
        )
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.torch_gen = torch.Generator()
        self.np_rng = np.random.default_rng(derive_seed(config.seed, NP_STREAM))
        self.episodes_done = 0
        self.il_done = False

        if resume_from is not None:
            self._restore(Path(resume_from))
        else:
            self.torch_gen.manual_seed(derive_seed(config.seed, TORCH_STREAM))
            init_networks(self.nets, self.torch_gen)

    # ------------------------------------------------------------------ run

    def run(self) -> Path:
        cfg = self.config
        if not self.il_done:
            self._imitation_stage()
            self.il_done = True
            self._save(self.out_dir / "checkpoints" / "after_il.ckpt")
        while self.episodes_done < cfg.rl_episodes:
            row = self._rl_episode(self.episodes_done)
            self.episodes_done += 1
            self._log_row(row)
            if cfg.eval_every > 0 and self.episodes_done % cfg.eval_every == 0:
                self._evaluation_snapshot()
            if cfg.checkpoint_every > 0 and self.episodes_done % cfg.checkpoint_every == 0:
                self._save(
                    self.out_dir / "checkpoints" / f"ep{self.episodes_done:06d}.ckpt"
                )
        final = self.out_dir / "checkpoints" / "final.ckpt"
        self._save(final)
        return final

    def _imitation_stage(self) -> None:
        cfg = self.config
        if cfg.il_episodes < 1:
            return
        demos = generate_demonstrations(
            cfg.il_episodes,
            cfg.seed,
            cfg.n_humans,
            cfg.gamma,
            cfg.env_params(robot_visible=True),
            cfg.scenario_kwargs(),
            cfg.goal_tolerance,
        )
        self.buffer.extend(demos.transitions)
        returns = np.asarray(demos.returns)
        n = len(demos.transitions)
        batches_per_epoch = max(1, n // cfg.batch_size)
        for epoch in range(cfg.il_epochs):
            sums = {"policy_loss": 0.0, "critic_loss": 0.0, "selection_loss": 0.0}
            for _ in range(batches_per_epoch):
                idx = self.np_rng.integers(0, n, size=min(cfg.batch_size, n))
                batch = [demos.transitions[int(i)] for i in idx]
                target = torch.as_tensor(returns[idx], dtype=self.nets.dtype)
                losses = imitation_update(
                    self.nets, batch, target, self.opts.il, cfg.action_scale
                )
                for key in sums:
                    sums[key] += losses[key]
            self._log_row(
                {
                    "episode": epoch + 1,
                    "stage": "il",
                    "return": "",
                    "outcome": "",
                    "steps": batches_per_epoch,
                    "policy_loss": repr(sums["policy_loss"] / batches_per_epoch),
                    "critic_loss": repr(sums["critic_loss"] / batches_per_epoch),
                    "selection_loss": repr(sums["selection_loss"] / batches_per_epoch),
                    "buffer_size": len(self.buffer),
                }
            )
        # Warm-started critics become the first target networks.
        self.nets.sync_targets()

    def _rl_episode(self, episode: int) -> dict:
        cfg = self.config
        scenario = make_scenario(
            cfg.n_humans,
            derive_seed(cfg.seed, RL_SCENARIO_STREAM, episode),
            **cfg.scenario_kwargs(),
        )
        state = self.env.reset(scenario)
        ep_return = 0.0
        steps = 0
        losses: dict[str, float] = {}
        event = None
        while not state.done:
            action = act(
                state, self.nets, cfg.dt, cfg.m_samples, self.torch_gen, deterministic=False
            )
            before = joint_state(state)
            state, reward, done, event = self.env.step(state, action)
            self.buffer.push(
                Transition(before, action.as_array(), reward, joint_state(state), done)
            )
            if len(self.buffer) >= cfg.batch_size:
                batch = self.buffer.sample(cfg.batch_size, self.np_rng)
                losses = rl_update(
                    self.nets,
                    batch,
                    self.opts,
                    gamma=cfg.gamma,
                    alpha=cfg.alpha,
                    tau=cfg.tau,
                    m=cfg.m_samples,
                    action_scale=cfg.action_scale,
                    generator=self.torch_gen,
                )
            ep_return += reward
            steps += 1
        return {
            "episode": episode + 1,
            "stage": "rl",
            "return": repr(ep_return),
            "outcome": _OUTCOME[event.kind],
            "steps": steps,
            "policy_loss": repr(losses["policy_loss"]) if losses else "",
            "critic_loss": repr(losses["critic_loss"]) if losses else "",
            "selection_loss": repr(losses["selection_loss"]) if losses else "",
            "buffer_size": len(self.buffer),
        }

    def _evaluation_snapshot(self) -> None:
        cfg = self.config
        policy = NetworkPolicy(self.nets, cfg.dt, cfg.m_samples, deterministic=False)
        metrics = evaluate_suite(
            policy,
            cfg.eval_episodes,
            cfg.n_humans,
            cfg.eval_base_seed,
            env_params=cfg.env_params(robot_visible=False),
            scenario_kwargs=cfg.scenario_kwargs(),
        )
        path = self.out_dir / "eval_log.csv"
        new = not path.exists()
        with open(path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(
                    ["episode", "n_cases", "success_rate", "collision_rate",
                     "timeout_rate", "avg_nav_time"]
                )
            writer.writerow(
                [
                    self.episodes_done,
                    metrics.n_cases,
                    repr(metrics.success_rate),
                    repr(metrics.collision_rate),
                    repr(metrics.timeout_rate),
                    repr(metrics.avg_nav_time),
                ]
            )

    def _log_row(self, row: dict) -> None:
        path = self.out_dir / "train_log.csv"
        new = not path.exists()
        with open(path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(LOG_COLUMNS)
            writer.writerow([row[c] for c in LOG_COLUMNS])

    # ----------------------------------------------------------- checkpoint

    def _save(self, path: Path, include_buffer: bool = True) -> Path:
        arrays = network_arrays(self.nets)
        for name in ("critic", "policy", "selection"):
            arrays.update(
                optimizer_arrays(
                    getattr(self.opts, name), self.opts.named[name], f"opt.{name}."
                )
            )
        arrays["rng.torch"] = self.torch_gen.get_state().numpy()
        if include_buffer:
            arrays.update(buffer_arrays(self.buffer))
        manifest = {
            "config": config_to_dict(self.config),
            "counters": {
                "episodes_done": self.episodes_done,
                "il_done": self.il_done,
            },
            "rng_numpy": self.np_rng.bit_generator.state,
        }
        save_checkpoint(path, arrays, manifest)
        return path

    def _restore(self, path: Path) -> None:
        arrays, manifest = load_checkpoint(path)
        load_network_arrays(self.nets, arrays)
        for name in ("critic", "policy", "selection"):
            load_optimizer_arrays(
                getattr(self.opts, name), self.opts.named[name], f"opt.{name}.", arrays
            )
        if "rng.torch" not in arrays:
            raise CheckpointError("checkpoint is missing the torch RNG state")
        self.torch_gen.set_state(torch.from_numpy(arrays["rng.torch"].copy()))
        self.np_rng.bit_generator.state = manifest["rng_numpy"]
        load_buffer_arrays(self.buffer, arrays)
        counters = manifest["counters"]
        self.episodes_done = int(counters["episodes_done"])
        self.il_done = bool(counters["il_done"])


def train(
    config: RunConfig,
    out_dir: str | Path | None = None,
    resume_from: str | Path | None = None,
) -> Path:
    """Run (or resume) the full training procedure; returns the final checkpoint."""
    return Trainer(config, out_dir, resume_from).run()


def load_networks(checkpoint_path: str | Path) -> tuple[AgentNetworks, RunConfig]:
    """Instantiate networks from a checkpoint's config and weights."""
    from ..config import config_from_dict

    arrays, manifest = load_checkpoint(checkpoint_path)
    config = config_from_dict(manifest["config"])
    nets = AgentNetworks(config.network_widths(), dtype=config.torch_dtype())
    load_network_arrays(nets, arrays)
    return nets, config


# ---------------------------------------------------------------------------
# Replay buffer <-> flat arrays (uniform crowd size)


def buffer_arrays(buffer: ReplayBuffer) -> dict[str, np.ndarray]:
    count = len(buffer)
    out = {"buffer.count": np.array([count], dtype=np.int64)}
    if count == 0:
        return out
    transitions = [buffer[i] for i in range(count)]
    sizes = {t.state.human_histories.shape[0] for t in transitions}
    if len(sizes) != 1:
        raise CheckpointError("buffer serialisation requires a uniform crowd size")
    for tag, pick in (("state", lambda t: t.state), ("next", lambda t: t.next_state)):
        out[f"buffer.{tag}.robot_history"] = np.stack(
            [pick(t).robot_history for t in transitions]
        )
        out[f"buffer.{tag}.human_histories"] = np.stack(
            [pick(t).human_histories for t in transitions]
        )
        out[f"buffer.{tag}.goal"] = np.stack([pick(t).goal for t in transitions])
        out[f"buffer.{tag}.v_pref"] = np.array([pick(t).v_pref for t in transitions])
    out["buffer.action"] = np.stack([t.action for t in transitions])
    out["buffer.reward"] = np.array([t.reward for t in transitions])
    out["buffer.done"] = np.array([t.done for t in transitions], dtype=np.uint8)
    return out


def load_buffer_arrays(buffer: ReplayBuffer, arrays: dict[str, np.ndarray]) -> None:
    if "buffer.count" not in arrays:
        raise CheckpointError("checkpoint is missing the replay buffer")
    count = int(arrays["buffer.count"][0])
    for i in range(count):
        state = JointState(
            robot_history=arrays["buffer.state.robot_history"][i],
            human_histories=arrays["buffer.state.human_histories"][i],
            goal=arrays["buffer.state.goal"][i],
            v_pref=float(arrays["buffer.state.v_pref"][i]),
        )
        next_state = JointState(
            robot_history=arrays["buffer.next.robot_history"][i],
            human_histories=arrays["buffer.next.human_histories"][i],
            goal=arrays["buffer.next.goal"][i],
            v_pref=float(arrays["buffer.next.v_pref"][i]),
        )
        buffer.push(
            Transition(
                state=state,
                action=arrays["buffer.action"][i],
                reward=float(arrays["buffer.reward"][i]),
                next_state=next_state,
                done=bool(arrays["buffer.done"][i]),
            )
        )
