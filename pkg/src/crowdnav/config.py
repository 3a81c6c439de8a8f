"""Flat key=value run configuration with validated defaults.

Defaults reproduce the reference hyperparameters; every key can be
overridden from the config file and the effective configuration is
echoed into the run directory.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .networks import NetworkWidths
from .simulation.env import EnvParams
from .simulation.orca import OrcaParams


class ConfigError(ValueError):
    """Bad key, bad type, or an invariant violation; names the key."""


@dataclass
class RunConfig:
    # Scenario / simulation
    n_humans: int = 5
    circle_radius: float = 4.0
    agent_radius: float = 0.3
    v_pref: float = 1.0
    perturbation: float = 0.5
    dt: float = 0.25
    time_limit: float = 25.0
    goal_tolerance: float = 0.3
    discomfort_dist: float = 0.2
    # ORCA
    neighbor_dist: float = 10.0
    time_horizon: float = 5.0
    orca_max_speed: float = 1.0
    orca_safety_space: float = 0.01
    # Network widths
    subgraph_hidden: int = 64
    gnn_width: int = 128
    policy_hidden: tuple[int, ...] = (256, 256, 256)
    critic_hidden: tuple[int, ...] = (256, 256, 256)
    selection_hidden: tuple[int, ...] = (256, 256)
    # Training
    gamma: float = 0.99
    alpha: float = 0.05
    batch_size: int = 256
    buffer_capacity: int = 400_000
    il_episodes: int = 2000
    il_epochs: int = 20
    rl_episodes: int = 15000
    il_lr: float = 1e-3
    rl_lr: float = 3e-4
    m_samples: int = 4
    tau: float = 0.005
    trunk_updates: str = "both"  # "both" or "critic"
    # Cadence
    eval_every: int = 1000
    eval_episodes: int = 100
    checkpoint_every: int = 1000
    # Seeds / execution
    seed: int = 0
    eval_base_seed: int = 100_000
    torch_threads: int = 1
    dtype: str = "float64"
    # Output
    out_dir: str = "runs/default"

    def __post_init__(self) -> None:
        validate_config(self)

    # Derived views consumed by the subsystems.

    def orca_params(self) -> OrcaParams:
        return OrcaParams(
            neighbor_dist=self.neighbor_dist,
            time_horizon=self.time_horizon,
            time_step=self.dt,
            max_speed=self.orca_max_speed,
            safety_space=self.orca_safety_space,
        )

    def env_params(self, robot_visible: bool = False) -> EnvParams:
        return EnvParams(
            dt=self.dt,
            time_limit=self.time_limit,
            goal_tolerance=self.goal_tolerance,
            discomfort_dist=self.discomfort_dist,
            robot_visible=robot_visible,
            orca=self.orca_params(),
        )

    def network_widths(self) -> NetworkWidths:
        return NetworkWidths(
            subgraph_hidden=self.subgraph_hidden,
            gnn_width=self.gnn_width,
            policy_hidden=self.policy_hidden,
            critic_hidden=self.critic_hidden,
            selection_hidden=self.selection_hidden,
        )

    def scenario_kwargs(self) -> dict:
        return {
            "circle_radius": self.circle_radius,
            "agent_radius": self.agent_radius,
            "v_pref": self.v_pref,
            "perturbation": self.perturbation,
        }

    @property
    def action_scale(self) -> float:
        return self.v_pref * self.dt

    def torch_dtype(self):
        import torch

        return torch.float32 if self.dtype == "float32" else torch.float64


_POSITIVE_FLOATS = (
    "circle_radius", "agent_radius", "v_pref", "perturbation", "dt", "time_limit",
    "goal_tolerance", "neighbor_dist", "time_horizon", "orca_max_speed",
    "alpha", "il_lr", "rl_lr",
)
_POSITIVE_INTS = (
    "n_humans", "batch_size", "buffer_capacity", "m_samples",
    "eval_episodes", "torch_threads", "subgraph_hidden", "gnn_width",
)
# eval_every / checkpoint_every of 0 disable the cadence.
_NON_NEGATIVE_INTS = (
    "il_episodes", "il_epochs", "rl_episodes", "eval_every", "checkpoint_every",
)


def validate_config(config: RunConfig) -> None:
    if not 0.0 < config.gamma < 1.0:
        raise ConfigError(f"gamma must satisfy 0 < gamma < 1, got {config.gamma}")
    if not 0.0 <= config.tau <= 1.0:
        raise ConfigError(f"tau must lie in [0, 1], got {config.tau}")
    if config.discomfort_dist < 0:
        raise ConfigError(f"discomfort_dist must be >= 0, got {config.discomfort_dist}")
    if config.orca_safety_space < 0:
        raise ConfigError(
            f"orca_safety_space must be >= 0, got {config.orca_safety_space}"
        )
    for name in _POSITIVE_FLOATS:
        if getattr(config, name) <= 0:
            raise ConfigError(f"{name} must be > 0, got {getattr(config, name)}")
    for name in _POSITIVE_INTS:
        if getattr(config, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(config, name)}")
    for name in _NON_NEGATIVE_INTS:
        if getattr(config, name) < 0:
            raise ConfigError(f"{name} must be >= 0, got {getattr(config, name)}")
    if config.dtype not in ("float32", "float64"):
        raise ConfigError(
            f"dtype must be 'float32' or 'float64', got {config.dtype!r}"
        )
    if config.trunk_updates not in ("both", "critic"):
        raise ConfigError(
            f"trunk_updates must be 'both' or 'critic', got {config.trunk_updates!r}"
        )
    if config.gnn_width != 2 * config.subgraph_hidden:
        raise ConfigError(
            f"gnn_width must equal 2*subgraph_hidden, got {config.gnn_width} "
            f"vs 2*{config.subgraph_hidden}"
        )
    for name in ("policy_hidden", "critic_hidden", "selection_hidden"):
        widths = getattr(config, name)
        if not widths or any(w < 1 for w in widths):
            raise ConfigError(f"{name} must be a non-empty list of positive ints")


def _coerce(name: str, value: str, field_type) -> object:
    try:
        if field_type is int:
            return int(value)
        if field_type is float:
            return float(value)
        if field_type is bool:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if field_type is str:
            return value
        # tuple[int, ...]
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {value!r} as {field_type}") from exc


def parse_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Load a config file (missing path -> all defaults) and apply overrides."""
    values: dict[str, object] = {}
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}

    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in fields:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, value, _field_type(fields[key]))

    for key, value in (overrides or {}).items():
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = value

    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _field_type(field: dataclasses.Field):
    if field.type in ("int", int):
        return int
    if field.type in ("float", float):
        return float
    if field.type in ("str", str):
        return str
    if field.type in ("bool", bool):
        return bool
    return tuple


def format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def write_config(config: RunConfig, path: str | Path) -> None:
    """Echo the effective configuration; parses back to an equal RunConfig."""
    path = Path(path)
    lines = [
        f"{f.name} = {format_value(getattr(config, f.name))}"
        for f in dataclasses.fields(RunConfig)
    ]
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def config_to_dict(config: RunConfig) -> dict:
    out = {}
    for f in dataclasses.fields(RunConfig):
        value = getattr(config, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def config_from_dict(data: dict) -> RunConfig:
    kwargs = {}
    for f in dataclasses.fields(RunConfig):
        if f.name in data:
            value = data[f.name]
            kwargs[f.name] = tuple(value) if isinstance(value, list) else value
    return RunConfig(**kwargs)
