"""Deterministic, order-independent random streams.

Every stochastic quantity in a run (gradient noise, attack noise, data
shuffles, initialization) draws from its own generator keyed by
``(master_seed, domain, *indices)``.  Streams are derived through
``numpy.random.SeedSequence`` hashing, so the value produced for e.g.
worker 3 at step 17 does not depend on when, or whether, any other
stream was consumed.  This is what makes runs bitwise reproducible and
safe to parallelize per worker.
"""
from __future__ import annotations

import numpy as np

# Domain tags keep independent uses of the same (k, n) indices from
# colliding in the hash.
DOMAIN_GRADIENT = 0
DOMAIN_ATTACK = 1
DOMAIN_PARTITION = 2
DOMAIN_SAMPLING = 3
DOMAIN_GRAPH = 4
DOMAIN_ANALYSIS = 5


def stream(master_seed: int, domain: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(master_seed, domain, *key)``."""
    seq = np.random.SeedSequence((int(master_seed), int(domain)) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
