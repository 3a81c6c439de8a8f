"""Deterministic seed derivation for independent RNG streams."""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Stateless, collision-resistant seed from integer parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])
