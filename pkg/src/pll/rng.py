"""Deterministic uniform streams.

All randomness in the package comes from Philox-4x64 (a counter-based
generator) keyed directly by ``(seed, rep)``.  Distinct keys give
statistically independent streams, so replication ``r`` of a run seeded
with ``s`` is a pure function of ``(s, r)`` and replications can be
evaluated in any order or in parallel.
"""

import numpy as np

STREAM_VERSION = "philox4x64-key(seed,rep)-v1"

_MAX_KEY = 2**64


def stream(seed, rep=0):
    """Return a fresh generator for replication ``rep`` under ``seed``."""
    seed = int(seed)
    rep = int(rep)
    if not (0 <= seed < _MAX_KEY and 0 <= rep < _MAX_KEY):
        raise ValueError(f"seed and rep must lie in [0, 2**64), got {seed}, {rep}")
    key = np.array([seed, rep], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(seed, n, rep=0):
    return stream(seed, rep).random(int(n))
