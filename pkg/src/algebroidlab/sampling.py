"""Deterministic sample-point generation for validators and reports."""

import numpy as np


def generator(seed):
    """Counter-based generator keyed by a single 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def seeded_points(n, dim, seed, low=-1.0, high=1.0):
    """n points uniform in [low, high]^dim, reproducible across runs."""
    gen = generator(seed)
    return gen.uniform(low, high, size=(int(n), int(dim)))
