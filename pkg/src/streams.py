"""Counter-based random streams keyed by (seed, cell key)."""

import numpy as np


def make_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for one cell; equal keys give equal streams."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))
