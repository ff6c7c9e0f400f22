"""Chunk-seeded random streams.

Every stochastic routine splits its work into fixed-size chunks and draws
chunk ``j`` from a generator keyed by ``(seed, j)``.  Partial results are
reduced in chunk order, so output never depends on how many threads ran the
chunks.  The bit generator is pinned to PCG64.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_SIZE = 1 << 16


def chunk_rng(seed, chunk_index, stream=0):
    """Generator for one chunk; ``stream`` separates unrelated uses of one seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(chunk_index)))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_sizes(n, chunk_size=CHUNK_SIZE):
    full, rest = divmod(int(n), chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(fn, sizes, threads=1):
    """Apply ``fn(index, size)`` to every chunk and return results in chunk order."""
    if threads is None or threads <= 1 or len(sizes) <= 1:
        return [fn(j, s) for j, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))
