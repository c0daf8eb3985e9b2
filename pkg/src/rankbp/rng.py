"""Seed-deterministic random streams.

Every replicate draws from its own Philox stream keyed by the pair
``(seed, replicate)``.  Streams are a pure function of that pair, so results
never depend on how replicates are scheduled across workers.
"""

import numpy as np

_U64 = 1 << 64


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def replicate_stream(seed, replicate=0, stream=0):
    """Return the generator for replicate ``replicate`` under master ``seed``.

    ``stream`` selects a disjoint sub-stream (high word of the Philox
    counter) so independent roles of one replicate never share draws.
    """
    seed = check_seed(seed)
    replicate = int(replicate)
    if not 0 <= replicate < _U64:
        raise ValueError(f"replicate index out of range: {replicate}")
    counter = [0, 0, 0, int(stream)]
    return np.random.Generator(np.random.Philox(key=(seed << 64) | replicate, counter=counter))


def run_replicates(fn, seed, reps, threads=1, stream=0):
    """Evaluate ``fn(r, rng)`` for ``r = 0..reps-1``, returned in replicate order.

    ``threads > 1`` uses a thread pool; the compiled kernels release the GIL
    while they draw, and ordering of the result list is by replicate index.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")

    def one(r):
        return fn(r, replicate_stream(seed, r, stream))

    if threads <= 1:
        return [one(r) for r in range(reps)]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(reps)))
