"""Keyed random streams.

Every stochastic draw in the toolkit comes from a generator keyed by
(seed, domain, index...) so results never depend on draw order, worker
count, or scheduling.  Domains keep the per-module streams disjoint.
"""

from __future__ import annotations

import numpy as np

DOMAIN_GEOMETRY_COUNT = 0
DOMAIN_GEOMETRY_OBJECT = 1
DOMAIN_SOURCE = 2
DOMAIN_TRANSPORT = 3
DOMAIN_DETECTOR = 4

_MASK64 = (1 << 64) - 1


def keyed_stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *key)."""
    parts = tuple(int(k) & _MASK64 for k in (seed, *key))
    return np.random.default_rng(np.random.SeedSequence(parts))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit child seed for (seed, *key), e.g. per-sample seeds."""
    parts = tuple(int(k) & _MASK64 for k in (seed, *key))
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint64)[0])
