"""Per-subsystem random streams.

Every stochastic component draws from its own named PCG64 stream so that
changing one subsystem (say, the GA) never perturbs another (say, user
mobility).  Streams are keyed by (seed, label) and are stable across
platforms and process boundaries.
"""

from __future__ import annotations

import zlib

import numpy as np

# Canonical stream labels used by the simulator.
STREAMS = ("mobility", "dtn", "ga", "heuristics", "init")


def stream_rng(seed: int, label: str) -> np.random.Generator:
    """Independent generator for a (seed, label) pair."""
    key = zlib.crc32(label.encode("ascii"))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(key,))
    return np.random.Generator(np.random.PCG64(ss))
