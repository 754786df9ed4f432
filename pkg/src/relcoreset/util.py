"""Shared helpers: deterministic RNG streams, hashing, timing."""

from __future__ import annotations

import hashlib
import time
from contextlib import contextmanager

import numpy as np

# Stream labels for derived generators.  Every consumer of randomness gets its
# own counter-based stream keyed by (seed, label, *extra) so that adding or
# reordering one consumer never shifts the draws of another.
STREAM_LEAVES = 1
STREAM_MERGE = 2
STREAM_SAMPLE = 3
STREAM_WEIGHTS = 4
STREAM_SYNTH = 5
STREAM_TRAIN = 6
STREAM_DIAMETER = 7
STREAM_CHOOSE_K = 8


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for one named stream of a root seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, path)])))


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return rng_for(int(seed_or_rng))


def blob_hash(path: str) -> str:
    """Content hash of a file, git-blob style (sha1 over a sized header + bytes)."""
    with open(path, "rb") as fh:
        data = fh.read()
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def array_hash(*arrays: np.ndarray) -> str:
    """Stable hash of array contents (shape + dtype + bytes)."""
    h = hashlib.sha1()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(repr((a.shape, a.dtype.str)).encode())
        h.update(a.tobytes())
    return h.hexdigest()


class Timings(dict):
    """Phase timer; accumulates wall-clock seconds per label."""

    @contextmanager
    def phase(self, label: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self[label] = self.get(label, 0.0) + (time.perf_counter() - t0)


MAX_EXACT = float(2**53)  # largest count float64 can carry exactly
