"""Seeded random streams.

Every random draw in the package goes through :func:`make_rng`, which builds a
counter-based Philox generator from an explicit seed plus optional stream
labels.  Distinct labels give statistically independent streams, so a worker
handling one (seed, task) never shares generator state with another.
"""

import zlib

import numpy as np


def _label_to_int(label):
    if isinstance(label, (int, np.integer)):
        return int(label)
    return zlib.crc32(str(label).encode("utf-8"))


def make_rng(seed, *stream):
    """Return a Philox-backed ``numpy.random.Generator`` for ``(seed, *stream)``."""
    if int(seed) < 0:
        raise ValueError("seed must be non-negative")
    entropy = [int(seed)] + [_label_to_int(s) for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
