"""Deterministic randomness.

Two mechanisms are used throughout the package:

* ``substream(seed, block)`` gives an independent ``numpy.random.Generator``
  for replication block ``block`` of a run with master seed ``seed``.  It is
  ``SeedSequence(seed, spawn_key=(block,))``.  Blocks hold
  ``block_size_for(n)`` consecutive replications, so the stream of a block
  never depends on how many workers execute the run.
* ``keyed_bits(*keys)`` is a counter-based hash (SplitMix64 finalizer chained
  over the keys).  It lets a mixture draw assign a coefficient to any
  (draw, unit, exposure) triple without materializing a table.
"""

import numpy as np

BLOCK_SIZE = 1000

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def substream(seed, block):
    """Generator for replication block ``block`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def block_size_for(n, budget=2_000_000):
    """Replications per block for n units; a deterministic function of n."""
    return max(1, min(BLOCK_SIZE, budget // max(int(n), 1)))


def blocks(reps, block_size=BLOCK_SIZE):
    """Yield ``(block_index, start, stop)`` covering ``range(reps)``."""
    for b, start in enumerate(range(0, reps, block_size)):
        yield b, start, min(start + block_size, reps)


def _mix(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def keyed_bits(*keys):
    """Hash integer keys (scalars or broadcastable arrays) to uint64 values."""
    with np.errstate(over="ignore"):
        h = np.zeros((), dtype=np.uint64)
        for k in keys:
            k = np.asarray(k)
            if k.dtype != np.uint64:
                k = k.astype(np.int64).astype(np.uint64)
            h = _mix(h ^ k)
    return h


def keyed_signs(*keys):
    """Uniform +/-1 values keyed by integers; float64 output."""
    bit = (keyed_bits(*keys) >> np.uint64(63)).astype(np.int8)
    return (2.0 * bit - 1.0).astype(np.float64)


def keyed_uniform(*keys):
    """Uniform [0, 1) values keyed by integers."""
    return (keyed_bits(*keys) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
