"""Training: replay storage, demonstrations, updates, and the run loop."""

from .demos import DemoSet, generate_demonstrations
from .loop import Trainer, load_networks, train
from .replay import ReplayBuffer, Transition
from .updates import (
    Optimizers,
    build_optimizers,
    critic_targets,
    imitation_update,
    rl_update,
    sac_update,
    selection_targets,
    selection_update,
)

__all__ = [
    "DemoSet",
    "Optimizers",
    "ReplayBuffer",
    "Trainer",
    "Transition",
    "build_optimizers",
    "critic_targets",
    "generate_demonstrations",
    "imitation_update",
    "load_networks",
    "rl_update",
    "sac_update",
    "selection_targets",
    "selection_update",
    "train",
]
