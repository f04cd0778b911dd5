"""Labeled derivation of per-purpose random substreams from one master seed.

Every random draw in the package comes from a generator built here, keyed by
(master seed, purpose, *indices). Record-level streams depend only on their
own key, so generation order and worker layout cannot change results.
"""

import numpy as np

# purpose codes (stable; changing one changes every derived stream)
DATASET_RECORD = 0
SCENARIO_NOISE = 1
BASELINE_NOISE = 2
ENV_RANDOMIZATION = 3
ALIGNMENT = 4


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given purpose key."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def derived_seed(master_seed: int, *key: int) -> int:
    """Stable 63-bit integer seed for APIs that take a plain seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)
