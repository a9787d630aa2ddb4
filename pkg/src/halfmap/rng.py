"""Deterministic stream derivation for all randomness in the package.

Every run is driven by one 64-bit master seed.  Substreams are addressed,
not sequential: a stream is identified by (master seed, purpose code,
integer coordinates), derived through numpy's SeedSequence spawn keys.
Two runs that touch the same address draw identical values no matter in
which order the addresses are visited, which is what makes lazy window
extension and replicate-level parallelism reproducible.

Purpose codes used across the package:

  STEP      bridge increments, per block of 256 edges, coordinates (side, block)
  TREE      one graft, coordinates (side, |position|)
  REPLICATE one Monte Carlo replicate or block of replicates, coordinate (index,)
  TRACE     corner choices of random proper geodesics, coordinate (index,)

Numba kernels cannot hold Generator objects; they receive uint64 seeds
produced by `kernel_seeds` and expand them internally with splitmix64
(same derivation root, different expansion -- documented, still addressed
by replicate index and therefore scheduler-independent).
"""

from __future__ import annotations

import numpy as np

STEP = 0
TREE = 1
REPLICATE = 2
TRACE = 3

STEP_BLOCK = 256


def _flatten_key(key):
    """Encode a tuple of possibly-negative ints as a nonnegative spawn key."""
    flat = []
    for k in key:
        k = int(k)
        if k >= 0:
            flat.extend((0, k))
        else:
            flat.extend((1, -k))
    return tuple(flat)


class StreamHandle:
    """Root of all randomness for one sampled object (window, replicate...).

    Wraps a master entropy value; `stream(...)` returns an independent
    numpy Generator for an address, `child(...)` a derived handle.
    """

    __slots__ = ("entropy", "key")

    def __init__(self, entropy, key=()):
        self.entropy = int(entropy)
        self.key = tuple(key)

    def stream(self, *address) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.entropy, spawn_key=_flatten_key(self.key + address)
        )
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *address) -> "StreamHandle":
        return StreamHandle(self.entropy, self.key + address)

    def kernel_seeds(self, n, *address) -> np.ndarray:
        """n uint64 seeds for numba kernels, one per replicate index."""
        ss = np.random.SeedSequence(
            entropy=self.entropy, spawn_key=_flatten_key(self.key + address)
        )
        return ss.generate_state(n, dtype=np.uint64)

    def __repr__(self):
        return f"StreamHandle(entropy={self.entropy}, key={self.key})"


def handle(seed, *key) -> StreamHandle:
    return StreamHandle(seed, key)
