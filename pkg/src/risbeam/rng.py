"""Seeded, counter-based random streams.

All randomness in the package flows through Philox generators keyed by a
64-bit seed. Independent purposes (channel draw, random RIS phases, random
initialization) use disjoint jump-ahead streams of the same key, so a single
seed reproduces an entire trial and per-trial seeds can be derived by index
without correlation between purposes.
"""

import numpy as np

# jump-ahead stream indices, one per purpose
STREAM_CHANNEL = 0
STREAM_RIS_PHASES = 1
STREAM_INIT = 2
STREAM_PROBLEM = 3


def rng_from_seed(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for `seed`, advanced to the given purpose stream."""
    bits = np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF)
    if stream:
        bits = bits.jumped(stream)
    return np.random.Generator(bits)


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Per-trial seed derived from a base seed (XOR with the trial index)."""
    return (int(base_seed) ^ int(trial_index)) & 0xFFFFFFFFFFFFFFFF
