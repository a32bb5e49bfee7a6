"""Keyed random substreams.

Every random draw in a trial comes from a generator keyed by
``(master_seed, trial_index, purpose, ...)``, so adding a consumer never
perturbs the draws of another one, and sweeps over array sizes stay paired.
"""

import numpy as np

LAYOUT = 1
TARGET_COUNT = 2
FADING = 3
TARGET_PHASE = 4
INIT = 5


def substream(master_seed: int, trial_index: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial_index), *map(int, key)))
    return np.random.Generator(np.random.PCG64(seq))


def complex_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-variance circular complex Gaussians; a prefix of a longer draw
    from the same generator state equals the shorter draw."""
    pairs = rng.standard_normal((size, 2))
    return (pairs[:, 0] + 1j * pairs[:, 1]) / np.sqrt(2.0)
