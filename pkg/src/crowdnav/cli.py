"""Operator entry points: train, evaluate, demo-gen, render."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, save_checkpoint
from .config import ConfigError, parse_config
from .evaluation import evaluate_suite, run_episode
from .plots import MissingChannelError, render_artifacts
from .policies import NetworkPolicy, OrcaRobotPolicy
from .simulation.scenario import ScenarioError
from .simulation.trace import write_trace
from .training.demos import generate_demonstrations
from .training.loop import load_networks, train

_ERRORS = (ConfigError, CheckpointError, ScenarioError, MissingChannelError, ValueError, OSError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdnav",
        description="Crowd navigation: simulation, training, evaluation, figures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", type=Path, default=None, help="output directory")

    p_train = sub.add_parser("train", help="imitation warm start plus RL training")
    common(p_train)
    p_train.add_argument("--resume", type=Path, default=None, help="checkpoint to resume from")

    p_eval = sub.add_parser("evaluate", help="run a seeded evaluation suite")
    common(p_eval)
    p_eval.add_argument("--checkpoint", type=Path, default=None)
    p_eval.add_argument("--episodes", type=int, default=None)
    p_eval.add_argument("--humans", type=int, default=None)
    p_eval.add_argument("--policy", choices=("model", "orca"), default="model")

    p_demo = sub.add_parser("demo-gen", help="generate ORCA demonstrations")
    common(p_demo)
    p_demo.add_argument("--episodes", type=int, default=None)

    p_render = sub.add_parser("render", help="emit a figure from one episode")
    common(p_render)
    p_render.add_argument("--kind", choices=("trajectory", "attention", "samples"),
                          required=True)
    p_render.add_argument("--checkpoint", type=Path, default=None)
    p_render.add_argument("--policy", choices=("model", "orca"), default="model")
    p_render.add_argument("--humans", type=int, default=None)
    return parser


def _load_config(args: argparse.Namespace):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    return parse_config(args.config, overrides)


def _make_policy(kind: str, checkpoint: Path | None, config):
    if kind == "orca":
        return OrcaRobotPolicy(config.orca_params(), config.goal_tolerance), config
    if checkpoint is None:
        raise ConfigError("--policy model requires --checkpoint")
    nets, ckpt_config = load_networks(checkpoint)
    policy = NetworkPolicy(nets, ckpt_config.dt, ckpt_config.m_samples, deterministic=False)
    return policy, ckpt_config


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    final = train(config, out_dir=config.out_dir, resume_from=args.resume)
    print(f"training complete; final checkpoint: {final}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    policy, _ = _make_policy(args.policy, args.checkpoint, config)
    n_cases = args.episodes if args.episodes is not None else 500
    n_humans = args.humans if args.humans is not None else config.n_humans
    base_seed = args.seed if args.seed is not None else config.eval_base_seed
    out_dir = Path(config.out_dir)
    metrics = evaluate_suite(
        policy,
        n_cases,
        n_humans,
        base_seed,
        env_params=config.env_params(robot_visible=False),
        scenario_kwargs=config.scenario_kwargs(),
        out_dir=out_dir,
        label=args.policy,
    )
    print(metrics.summary_table(args.policy))
    return 0


def cmd_demo_gen(args: argparse.Namespace) -> int:
    config = _load_config(args)
    episodes = args.episodes if args.episodes is not None else config.il_episodes
    demos = generate_demonstrations(
        episodes,
        config.seed,
        config.n_humans,
        config.gamma,
        config.env_params(robot_visible=True),
        config.scenario_kwargs(),
        config.goal_tolerance,
    )
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    arrays = {
        "demo.returns": np.asarray(demos.returns),
        "demo.actions": np.stack([t.action for t in demos.transitions]),
        "demo.rewards": np.asarray([t.reward for t in demos.transitions]),
    }
    manifest = {
        "episodes": episodes,
        "outcomes": demos.outcomes,
        "success_rate": demos.success_rate(),
    }
    save_checkpoint(out_dir / "demos.ckpt", arrays, manifest)
    (out_dir / "demo_log.csv").write_text(
        "episode,outcome\n"
        + "\n".join(f"{i},{o}" for i, o in enumerate(demos.outcomes))
        + "\n"
    )
    print(
        f"{episodes} demonstration episodes, success rate "
        f"{100 * demos.success_rate():.1f}%, {len(demos.transitions)} transitions"
    )
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    config = _load_config(args)
    policy, policy_config = _make_policy(args.policy, args.checkpoint, config)
    case_seed = args.seed if args.seed is not None else config.eval_base_seed
    n_humans = args.humans if args.humans is not None else config.n_humans
    result = run_episode(
        policy,
        case_seed,
        n_humans,
        env_params=config.env_params(robot_visible=False),
        scenario_kwargs=config.scenario_kwargs(),
    )
    out_dir = Path(config.out_dir) / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace(result.trace, out_dir / f"episode_{case_seed}.trace")
    summary = render_artifacts(
        result.trace, args.kind, out_dir / f"{args.kind}_{case_seed}.png"
    )
    print(f"{result.outcome} in {result.nav_time:.2f}s; wrote {summary['path']}")
    return 0


_HANDLERS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "demo-gen": cmd_demo_gen,
    "render": cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
