import numpy as np


def philox_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator on the Philox counter-based bit generator.

    `key` selects an independent substream, e.g. `philox_rng(seed, i)` for trajectory i,
    so draws do not depend on the order in which substreams are consumed.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))
