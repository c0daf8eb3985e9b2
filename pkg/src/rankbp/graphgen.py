"""Sampling ``G_n(A)``, neighborhood shells, and exact shell-law oracles.

Vertices are 0-based throughout the Python API; only the file formats and
CLI use 1-based labels.  Self-loops are sampled (``p_ii = 1 - exp(-ell a_ii)``)
but never contribute to shells or components.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import PreconditionError, SizeError
from .matrixlab import DotDecomp, SymMatrix, as_matrix

MAX_EXACT_N = 12
MAX_BRUTE_N = 4


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on ``range(n)``; self-loops allowed.

    ``edges`` is an ``(m, 2)`` int64 array with ``u <= v`` in each row and no
    duplicate rows.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= self.n):
            raise PreconditionError("edge endpoint out of range")
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0) if e.shape[0] else e
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_pairs(cls, n, pairs):
        return cls(n, np.array(list(pairs), dtype=np.int64).reshape(-1, 2))

    def edge_set(self):
        return {(int(u), int(v)) for u, v in self.edges}

    @property
    def n_self_loops(self):
        return int(np.sum(self.edges[:, 0] == self.edges[:, 1]))

    def adjacency(self):
        a = np.zeros((self.n, self.n), dtype=np.int64)
        a[self.edges[:, 0], self.edges[:, 1]] = 1
        a[self.edges[:, 1], self.edges[:, 0]] = 1
        return a


@dataclass(frozen=True)
class ShellSequence:
    """Disjoint non-empty shells ``S_0 = {root}, S_1, ...``; each shell is a sorted tuple.

    A sequence that stops before the requested depth means the next shell
    was empty.
    """

    shells: tuple

    @classmethod
    def from_sets(cls, sets):
        out = []
        for s in sets:
            if not s:
                break
            out.append(tuple(sorted(int(x) for x in s)))
        return cls(tuple(out))

    @property
    def root(self):
        return self.shells[0][0]

    def sizes(self, depth):
        """Shell sizes ``(|S_1|, ..., |S_depth|)``, zero-padded."""
        return tuple(len(self.shells[k]) if k < len(self.shells) else 0 for k in range(1, depth + 1))

    def __len__(self):
        return len(self.shells)


def edge_probabilities(a):
    """Upper-triangle pair list ``(iu, ju)`` in row-major ``i <= j`` order and ``p_ij``."""
    a = as_matrix(a)
    iu, ju = np.triu_indices(a.n)
    p = -np.expm1(-a.ell * a.entries[iu, ju])
    return iu, ju, p


def sample_graph(a, rng):
    """One draw of ``G_n(A)``: every pair ``i <= j`` once, in row-major order."""
    a = as_matrix(a)
    iu, ju, p = edge_probabilities(a)
    hit = rng.random(p.size) < p
    return Graph(a.n, np.column_stack([iu[hit], ju[hit]]))


class GraphSampler:
    """Reusable sampler for repeated draws from one kernel.

    Precomputes the pair list so each replicate costs one uniform per pair.
    """

    def __init__(self, a):
        self.matrix = as_matrix(a)
        self.iu, self.ju, self.p = edge_probabilities(self.matrix)

    def edges(self, rng):
        hit = rng.random(self.p.size) < self.p
        return np.column_stack([self.iu[hit], self.ju[hit]])

    def __call__(self, rng):
        return Graph(self.matrix.n, self.edges(rng))


def sample_rank1_graph(weights, ell, rng):
    """Draw ``G_n(a a')`` for a non-negative weight vector in O(n + edges).

    Same law as ``sample_graph`` on ``A = a a'`` but the draw order differs,
    so the two do not reproduce each other seed for seed.
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise PreconditionError("rank-1 weights must be finite and non-negative")
    if not ell > 0:
        raise PreconditionError("ell must be positive")
    order = np.argsort(-w, kind="stable")
    e = kernels.sample_rank1_edges(w[order], float(ell), rng)
    return Graph(w.size, order[e] if e.size else e)


def neighborhood_shells(g, root, depth):
    return shells_from_edges(g.n, g.edges, root, depth)


def shells_from_edges(n, edges, root, depth):
    """``neighborhood_shells`` on a raw ``(m, 2)`` edge array, skipping ``Graph`` normalization."""
    if not 0 <= root < n:
        raise PreconditionError(f"root {root} out of range for n={n}")
    if depth < 0:
        raise PreconditionError("depth must be >= 0")
    members, offsets = kernels.bfs_shells(n, edges, int(root), int(depth))
    return ShellSequence(tuple(
        tuple(sorted(members[offsets[k]:offsets[k + 1]].tolist())) for k in range(offsets.size - 1)
    ))


def collapse_construction(vectors, ell, rng):
    """Union of ``k`` independent rank-1 layers, copy ``h_l`` of vertex ``h`` merged back into ``h``.

    Layer ``l`` links ``h`` and ``m`` with probability
    ``1 - exp(-ell v_lh v_lm)``; the merged graph has edge marginals
    ``1 - exp(-ell sum_l v_lh v_lm)``.
    """
    if not isinstance(vectors, DotDecomp):
        vectors = DotDecomp(vectors)
    if np.any(vectors.vectors < 0):
        raise PreconditionError("collapse_construction needs non-negative vectors")
    layers = [sample_rank1_graph(v, ell, rng).edges for v in vectors.vectors]
    return Graph(vectors.n, np.vstack(layers))


def largest_component(g):
    return int(kernels.largest_component(g.n, g.edges))


def sparsity_diagnostic(a):
    """``sum_{i<j} (ell a_ij)^3`` over unordered off-diagonal pairs."""
    a = as_matrix(a)
    iu, ju = np.triu_indices(a.n, k=1)
    return float(np.sum((a.ell * a.entries[iu, ju]) ** 3))


def _check_root_depth(a, root, depth):
    if not 0 <= root < a.n:
        raise PreconditionError(f"root {root} out of range for n={a.n}")
    if not 0 <= depth <= a.n:
        raise PreconditionError(f"depth must be in [0, n], got {depth}")


def shell_distribution_exact(a, root, depth):
    """Exact law of the shell sequence via the exploration Markov kernel.

    Given current shell ``S`` and seen set ``U``, each ``j`` outside ``U``
    joins the next shell independently with probability
    ``1 - exp(-ell sum_{i in S} a_ij)``.  Keys are ``ShellSequence.shells``
    tuples.
    """
    a = as_matrix(a)
    n = a.n
    if n > MAX_EXACT_N:
        raise SizeError(f"exact shell oracle enumerates subsets; n={n} exceeds {MAX_EXACT_N}")
    _check_root_depth(a, root, depth)
    ent = a.entries
    ell = a.ell

    @lru_cache(maxsize=None)
    def cont(seen, current, remaining):
        # law of the shells after `current`, as {tuple_of_shells: prob}
        if remaining == 0:
            return {(): 1.0}
        cur = [i for i in range(n) if current >> i & 1]
        unseen = [j for j in range(n) if not seen >> j & 1]
        q = [-math.expm1(-ell * sum(ent[i, j] for i in cur)) for j in unseen]
        out = {}
        for bits in itertools.product((0, 1), repeat=len(unseen)):
            pr = 1.0
            for b, qj in zip(bits, q):
                pr *= qj if b else 1.0 - qj
            if pr == 0.0:
                continue
            nxt = [j for b, j in zip(bits, unseen) if b]
            if not nxt:
                out[()] = out.get((), 0.0) + pr
                continue
            mask = sum(1 << j for j in nxt)
            shell = tuple(nxt)
            for tail, pt in cont(seen | mask, mask, remaining - 1).items():
                key = (shell,) + tail
                out[key] = out.get(key, 0.0) + pr * pt
        return out

    start = 1 << root
    return {((root,),) + tail: p for tail, p in cont(start, start, depth).items()}


def brute_force_shell_distribution(a, root, depth):
    """Exact shell law by summing probabilities of every labeled graph (self-loops included)."""
    a = as_matrix(a)
    n = a.n
    if n > MAX_BRUTE_N:
        raise SizeError(f"brute-force oracle enumerates 2^(n(n+1)/2) graphs; n={n} exceeds {MAX_BRUTE_N}")
    _check_root_depth(a, root, depth)
    iu, ju, p = edge_probabilities(a)
    pairs = np.column_stack([iu, ju])
    p = p.tolist()
    out = {}
    for bits in itertools.product((0, 1), repeat=len(p)):
        pr = 1.0
        for b, pk in zip(bits, p):
            pr *= pk if b else 1.0 - pk
        if pr == 0.0:
            continue
        chosen = pairs[np.array(bits, dtype=bool)]
        key = neighborhood_shells(Graph(n, chosen), root, depth).shells
        out[key] = out.get(key, 0.0) + pr
    return out


def distribution_tv(p, q):
    """Total variation distance between two probability maps."""
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in set(p) | set(q))
