"""Deterministic random-stream derivation.

All randomness in the toolkit flows from a single integer root seed.
Independent streams are derived with ``numpy.random.SeedSequence`` spawn
keys, so Monte Carlo batches can run in any order (or in parallel) and
still produce identical results for a given root seed.

Derivation tree (spawn-key prefixes):

    (SIMULATE, path_index)          process simulation paths
    (BOOTSTRAP, resample_index)     block-bootstrap resamples
    (SUBUNIVERSE, size, trial)      random sub-universe draws
    (MONTECARLO, check_id, seed_i)  theory-concordance experiments
"""

from __future__ import annotations

import numpy as np

SIMULATE = 0
BOOTSTRAP = 1
SUBUNIVERSE = 2
MONTECARLO = 3


def derive_rng(root_seed: int, *key: int) -> np.random.Generator:
    """Return a Generator for the stream at ``key`` under ``root_seed``."""
    ss = np.random.SeedSequence(entropy=int(root_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
