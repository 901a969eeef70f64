"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by a root seed plus
an optional tuple of integer keys, so sub-streams such as replicate ``i`` or
"homogeneity draws" are derived deterministically and never overlap.
"""

import numpy as np


def make_rng(seed, *keys) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
