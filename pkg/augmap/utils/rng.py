"""
Random Streams

Seeded random number generators for simulation and fitting. Every draw of a
run is taken from a generator derived from (seed, stream, keys...), so runs
that differ in one parameter still share the draws of unrelated streams.
"""

from typing import Union

import numpy as np

STREAMS = {
    "detect": 0,
    "noise": 1,
    "clutter": 2,
    "jitter": 3,
    "confidence": 4,
    "ransac": 5,
}

SeedLike = Union[int, np.random.SeedSequence]


def seed_sequence(seed: int, stream: str, *keys: int) -> np.random.SeedSequence:
    """
    Build the seed sequence of one random stream.

    Args:
        seed: Run seed (non-negative, up to 64 bits).
        stream: Stream name, one of STREAMS.
        *keys: Non-negative integer keys such as frame and object index.

    Returns:
        A seed sequence unique to (seed, stream, keys).

    Raises:
        KeyError: If the stream name is unknown.
    """
    return np.random.SeedSequence([int(seed), STREAMS[stream], *(int(k) for k in keys)])


def derive_rng(seed: int, stream: str, *keys: int) -> np.random.Generator:
    """Generator for one (seed, stream, keys) combination."""
    return np.random.default_rng(seed_sequence(seed, stream, *keys))
