"""Experience storage: transitions and the bounded FIFO replay buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simulation.env import JointState


@dataclass(frozen=True)
class Transition:
    """One step of experience; states are full joint-state snapshots."""

    state: JointState
    action: np.ndarray  # (2,)
    reward: float
    next_state: JointState
    done: bool


class ReplayBuffer:
    """Ring buffer with strict oldest-first eviction."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._storage: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._storage)

    def push(self, transition: Transition) -> None:
        if len(self._storage) < self.capacity:
            self._storage.append(transition)
        else:
            self._storage[self._next] = transition
            self._next = (self._next + 1) % self.capacity

    def __getitem__(self, age: int) -> Transition:
        """Transition by age: 0 is the oldest currently stored."""
        if age < 0 or age >= len(self._storage):
            raise IndexError(age)
        if len(self._storage) < self.capacity:
            return self._storage[age]
        return self._storage[(self._next + age) % self.capacity]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._storage):
            raise ValueError(
                f"cannot sample {batch_size} from buffer of size {len(self._storage)}"
            )
        indices = rng.integers(0, len(self._storage), size=batch_size)
        return [self._storage[int(i)] for i in indices]

    def extend(self, transitions) -> None:
        for t in transitions:
            self.push(t)
