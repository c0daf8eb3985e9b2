"""Canonical partition of a 0/1 adjacency matrix into twin classes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrityError, PreconditionError
from .matrixlab import numeric_rank


@dataclass(frozen=True)
class TwinPartition:
    """Blocks of non-adjacent vertices with identical neighborhoods.

    ``blocks`` are sorted tuples ordered by their smallest vertex,
    ``block_of[i]`` is the block index of vertex ``i``, and ``proxy`` is the
    0/1 block adjacency matrix (zero diagonal).
    """

    blocks: tuple
    block_of: tuple
    proxy: np.ndarray

    @property
    def num_blocks(self):
        return len(self.blocks)

    @property
    def block_sizes(self):
        return tuple(len(b) for b in self.blocks)

    def expand(self):
        """Blow the proxy matrix back up to an ``n x n`` adjacency matrix."""
        idx = np.asarray(self.block_of)
        return self.proxy[np.ix_(idx, idx)]

    def quotient(self):
        """Adjacency matrix induced on one representative (smallest vertex) per block."""
        reps = [b[0] for b in self.blocks]
        return reps, self.proxy.copy()


def _check_binary(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError("adjacency matrix must be square")
    if not np.all((a == 0) | (a == 1)):
        raise PreconditionError("adjacency matrix must have 0/1 entries")
    if np.any(np.diag(a) != 0):
        raise PreconditionError("adjacency matrix must have a zero diagonal")
    if not np.array_equal(a, a.T):
        raise PreconditionError("adjacency matrix must be symmetric")
    return a.astype(np.int8)


def twin_partition(a):
    a = _check_binary(a)
    n = a.shape[0]
    groups = {}
    for i in range(n):
        groups.setdefault(a[i].tobytes(), []).append(i)
    blocks = sorted((tuple(g) for g in groups.values()), key=lambda b: b[0])
    block_of = [0] * n
    for j, b in enumerate(blocks):
        for i in b:
            block_of[i] = j
    reps = [b[0] for b in blocks]
    proxy = a[np.ix_(reps, reps)].astype(np.float64)
    proxy.setflags(write=False)
    part = TwinPartition(tuple(blocks), tuple(block_of), proxy)
    check_partition(a, part)
    return part


def check_partition(a, part):
    """Raise ``IntegrityError`` unless ``part`` is a valid twin partition of ``a``."""
    a = _check_binary(a)
    n = a.shape[0]
    if len(part.block_of) != n or sorted(i for b in part.blocks for i in b) != list(range(n)):
        raise IntegrityError("partition blocks do not cover the vertex set exactly once")
    for j, b in enumerate(part.blocks):
        if any(part.block_of[i] != j for i in b):
            raise IntegrityError(f"block_of disagrees with block {j}")
    if np.any(np.diag(part.proxy) != 0):
        raise IntegrityError("proxy matrix has a nonzero diagonal; some block is not independent")
    if not np.array_equal(part.expand(), a):
        raise IntegrityError("proxy matrix expanded by block sizes does not reproduce the adjacency matrix")


def kl_ratio(part, rank_k):
    """Blocks per ``2^(k/2)``; a monitoring ratio for the Kotlov-Lovasz bound."""
    if rank_k < 0:
        raise PreconditionError("rank must be >= 0")
    return part.num_blocks / 2.0 ** (rank_k / 2.0)


def is_twin_free(adj):
    """True when no two non-adjacent vertices share a neighborhood."""
    adj = np.asarray(adj)
    n = adj.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j] == 0 and np.array_equal(adj[i], adj[j]):
                return False
    return True


def partition_report(a, part=None):
    """JSON-ready ``{num_blocks, blocks, proxy, rank, kl_ratio}`` with 1-based blocks."""
    part = part if part is not None else twin_partition(a)
    rank = numeric_rank(np.asarray(a, dtype=np.float64))
    return {
        "num_blocks": part.num_blocks,
        "blocks": [[i + 1 for i in b] for b in part.blocks],
        "proxy": part.proxy.astype(int).tolist(),
        "rank": rank,
        "kl_ratio": kl_ratio(part, rank),
    }
