"""Seeded random streams.

Every run of a multi-run study draws from its own substream keyed on
``(seed, run_index)``, so results do not depend on execution order.
"""

import numpy as np


def make_rng(seed=None, run_index=None):
    """Return a ``numpy.random.Generator`` for ``seed`` (and optional substream)."""
    if isinstance(seed, np.random.Generator):
        if run_index is not None:
            raise TypeError("run_index requires an integer seed")
        return seed
    if seed is None:
        return np.random.default_rng()
    entropy = [int(seed)] if run_index is None else [int(seed), int(run_index)]
    return np.random.default_rng(np.random.SeedSequence(entropy))
