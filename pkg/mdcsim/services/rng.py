"""Seeded random substreams: one root seed, split per stage and per agent."""
from __future__ import annotations

import enum

import numpy as np


class Stage(enum.IntEnum):
    MAP = 0
    TRACE = 1
    PLACEMENT = 2
    TRAINING = 3


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, keys...). Same arguments, same stream."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)


def derived_seed(seed: int, *keys: int) -> int:
    """32-bit integer seed for libraries that want an int (scikit-learn)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
