"""Marked multi-type Poisson branching processes.

An :class:`MbpSpec` fixes, for every parent mark ``i`` and child type ``t``,
the Poisson rate of type-``t`` children, and for every type the mark
distribution of its children.  The ``build_*`` functions realize the
finite-type constructions of a rank-k kernel; :func:`induced_mark_rates`
computes the rate of mark-``j`` children of a mark-``i`` parent after summing
over types, which equals ``ell * a_ij`` exactly when a construction reproduces
the n-type process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConstructionError, IntegrityError, PreconditionError, SizeError
from .graphgen import ShellSequence
from .matrixlab import (
    CLAMP_TOL,
    DotDecomp,
    Rank2Decomp,
    SymMatrix,
    as_matrix,
    psd_rank2_to_dot,
    rank2_spectral,
    sign_patterns,
)
from .twinpart import TwinPartition, check_partition

DEFAULT_MAX_POP = 10**6
MAX_SIGNED_K = 20
ROW_SUM_TOL = 1e-12

CONSTRUCTIONS = ("rank1", "dot", "rank2", "kl", "kl-perturbed", "signed", "full-n")


@dataclass(frozen=True)
class MbpSpec:
    """Rates ``birth_rate[i, t]`` (``ell`` folded in) and mark laws ``mark_probs[t, j]``.

    Types whose normalizer vanished are inert: zero rate from every mark and
    an all-zero mark row.
    """

    birth_rate: np.ndarray
    mark_probs: np.ndarray
    name: str = ""
    inert: np.ndarray = field(default=None)

    def __post_init__(self):
        rate = np.array(self.birth_rate, dtype=np.float64, ndmin=2)
        probs = np.array(self.mark_probs, dtype=np.float64, ndmin=2)
        n_marks, n_types = rate.shape
        if probs.shape != (n_types, n_marks):
            raise PreconditionError(
                f"mark_probs shape {probs.shape} does not match (n_types, n_marks)=({n_types}, {n_marks})"
            )
        if not np.all(np.isfinite(rate)) or np.any(rate < 0):
            raise PreconditionError("birth rates must be finite and non-negative")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise PreconditionError("mark probabilities must be finite and non-negative")
        sums = probs.sum(axis=1)
        inert = sums == 0
        if np.any(rate[:, inert] > 0):
            t = int(np.flatnonzero(inert & (rate > 0).any(axis=0))[0])
            raise PreconditionError(f"type {t} has no mark law but a positive birth rate")
        bad = ~inert & (np.abs(sums - 1.0) > ROW_SUM_TOL)
        if np.any(bad):
            t = int(np.flatnonzero(bad)[0])
            raise PreconditionError(f"mark_probs row {t} sums to {sums[t]!r}, not 1")
        for arr in (rate, probs, inert):
            arr.setflags(write=False)
        object.__setattr__(self, "birth_rate", rate)
        object.__setattr__(self, "mark_probs", probs)
        object.__setattr__(self, "inert", inert)

    @property
    def n_marks(self):
        return self.birth_rate.shape[0]

    @property
    def n_types(self):
        return self.birth_rate.shape[1]

    def mark_cdf(self):
        """Cumulative mark laws with every entry from the last supported mark on set to 1."""
        cached = self.__dict__.get("_cdf")
        if cached is not None:
            return cached
        cdf = np.cumsum(self.mark_probs, axis=1)
        for t in range(self.n_types):
            support = np.flatnonzero(self.mark_probs[t] > 0)
            if support.size:
                cdf[t, support[-1]:] = 1.0
        cdf.setflags(write=False)
        self.__dict__["_cdf"] = cdf  # frozen dataclass: cache outside __setattr__
        return cdf


def _spec(rate, probs, name):
    return MbpSpec(np.asarray(rate), np.asarray(probs), name=name)


def _normalized(weights):
    """Row-wise ``w / sum(w)``, returning zero rows and sums for weightless rows."""
    w = np.asarray(weights, dtype=np.float64)
    s = w.sum(axis=1)
    probs = np.zeros_like(w)
    live = s > 0
    probs[live] = w[live] / s[live, None]
    return probs, np.where(live, s, 0.0)


def build_bp_n(a):
    """The n-type reference process: types are marks, rates ``ell * A``."""
    a = as_matrix(a)
    return _spec(a.ell * a.entries, np.eye(a.n), "full-n")


def build_mbp1(a, ell):
    a = np.asarray(a, dtype=np.float64).ravel()
    if np.any(a < 0):
        raise ConstructionError("rank-1 weights must be non-negative", int(np.flatnonzero(a < 0)[0]))
    total = float(a.sum())
    if total <= 0:
        raise ConstructionError("rank-1 weights sum to zero")
    return _spec((ell * a * total)[:, None], (a / total)[None, :], "rank1")


def build_mbp_dot(vectors, ell):
    if not isinstance(vectors, DotDecomp):
        vectors = DotDecomp(vectors)
    v = vectors.vectors
    if np.any(v < 0):
        l, i = np.argwhere(v < 0)[0]
        raise ConstructionError(f"dot-product vector {l + 1} has a negative entry at index {i + 1}", int(i))
    probs, sums = _normalized(v)
    rate = ell * v.T * sums[None, :]
    return _spec(rate, probs, "dot")


def _clamp_nonneg(x, scale, what):
    bad = x < -CLAMP_TOL * scale
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ConstructionError(f"{what} is negative at index {i + 1}: {x[i]!r}", i)
    return np.where(x < 0, 0.0, x)


def build_mbp2_indefinite(dec, ell):
    """Two-type construction for a rank-2 kernel with ``lambda2 < 0``.

    With ``x = sqrt(lambda1) v1`` and ``y = sqrt(|lambda2|) v2``: a mark-``i``
    parent has ``Poi(ell/sqrt2 (x_i - y_i) s_+)`` children of type 1, marked
    ``j`` w.p. ``(x_j + y_j) / (sqrt2 s_+)``, and symmetrically for type 2.
    """
    if not isinstance(dec, Rank2Decomp):
        raise PreconditionError("build_mbp2_indefinite needs a Rank2Decomp")
    if not dec.lambda2 < 0:
        raise ConstructionError(f"indefinite construction needs lambda2 < 0, got {dec.lambda2!r}")
    if dec.lambda1 < abs(dec.lambda2):
        raise ConstructionError(f"need lambda1 >= |lambda2|, got {dec.lambda1!r}, {dec.lambda2!r}")
    x = math.sqrt(dec.lambda1) * np.asarray(dec.v1)
    y = math.sqrt(-dec.lambda2) * np.asarray(dec.v2)
    scale = np.maximum(np.abs(x), np.abs(y))
    plus = _clamp_nonneg(x + y, scale, "sqrt(lambda1) v1 + sqrt|lambda2| v2")
    minus = _clamp_nonneg(x - y, scale, "sqrt(lambda1) v1 - sqrt|lambda2| v2")
    r2 = math.sqrt(2.0)
    s_plus = plus.sum() / r2
    s_minus = minus.sum() / r2
    rate = np.column_stack([ell / r2 * minus * s_plus, ell / r2 * plus * s_minus])
    probs = np.zeros((2, x.size))
    if s_plus > 0:
        probs[0] = plus / (r2 * s_plus)
    else:
        rate[:, 0] = 0.0
    if s_minus > 0:
        probs[1] = minus / (r2 * s_minus)
    else:
        rate[:, 1] = 0.0
    probs, _ = _normalized(probs)  # remove rounding drift in the row sums
    return _spec(rate, probs, "rank2")


def build_mbp2_posdef(a, ell=None):
    a = as_matrix(a)
    ell = a.ell if ell is None else ell
    spec = build_mbp_dot(psd_rank2_to_dot(a), ell)
    return MbpSpec(spec.birth_rate, spec.mark_probs, name="rank2")


def build_mbp_rank2(a, ell=None):
    """Dispatch on the sign of the second eigenvalue."""
    a = as_matrix(a)
    ell = a.ell if ell is None else ell
    dec = rank2_spectral(a)
    if dec.lambda2 < 0:
        return build_mbp2_indefinite(dec, ell)
    return build_mbp2_posdef(a, ell)


def build_mbp_kl(a, part, ell):
    """Types are blocks of the canonical partition; marks uniform within a block."""
    _check_kl(a, part)
    sizes = np.asarray(part.block_sizes, dtype=np.float64)
    rows = part.proxy[np.asarray(part.block_of)]
    rate = ell * rows * sizes[None, :]
    probs = np.zeros((part.num_blocks, len(part.block_of)))
    for j, block in enumerate(part.blocks):
        probs[j, list(block)] = 1.0 / len(block)
    return _spec(rate, probs, "kl")


def build_mbp_kl_perturbed(a, weights, part, ell):
    """Kernel ``diag(w) A diag(w)``: rates ``ell w_i proxy[P(i), j] W_j``, marks ``w_m / W_j`` on block ``j``."""
    _check_kl(a, part)
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size != len(part.block_of):
        raise ConstructionError(f"weight vector has length {w.size}, expected {len(part.block_of)}")
    if np.any(w < 0):
        i = int(np.flatnonzero(w < 0)[0])
        raise ConstructionError(f"perturbation weight is negative at index {i + 1}", i)
    weights_by_block = np.zeros((part.num_blocks, w.size))
    for j, block in enumerate(part.blocks):
        weights_by_block[j, list(block)] = w[list(block)]
    probs, block_w = _normalized(weights_by_block)
    rows = part.proxy[np.asarray(part.block_of)]
    rate = ell * w[:, None] * rows * block_w[None, :]
    return _spec(rate, probs, "kl-perturbed")


def _check_kl(a, part):
    m = a.entries if isinstance(a, SymMatrix) else np.asarray(a, dtype=np.float64)
    if not isinstance(part, TwinPartition):
        raise PreconditionError("expected a TwinPartition")
    try:
        check_partition(m, part)
    except IntegrityError:
        raise
    except PreconditionError as exc:
        raise IntegrityError(str(exc)) from exc


def build_mbp_signed(vectors, ell):
    """``2^(k-1)`` types, one per sign pattern on ``v_2..v_k``.

    Type ``l`` uses ``t(l) = v_1 +- v_2 ... +- v_k`` (non-negative under the
    dominance condition ``v_1i >= sum_{l>=2} |v_li|``); a mark-``i`` parent
    has ``Poi(ell / 2^(k-1) * t_i(l) * T(l))`` type-``l`` children marked
    ``j`` w.p. ``t_j(l) / T(l)``, ``T(l) = sum_j t_j(l)``.
    """
    v = np.atleast_2d(np.asarray(vectors.vectors if isinstance(vectors, DotDecomp) else vectors,
                                 dtype=np.float64))
    k, n = v.shape
    if k > MAX_SIGNED_K:
        raise SizeError(f"signed construction has 2^(k-1) types; k={k} exceeds {MAX_SIGNED_K}")
    dominance = v[0] - np.abs(v[1:]).sum(axis=0)
    scale = np.abs(v).sum(axis=0)
    bad = dominance < -CLAMP_TOL * np.maximum(scale, 1.0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ConstructionError(
            f"dominance violated at index {i + 1}: v1={float(v[0, i]):g} < sum |v_l| = {float(np.abs(v[1:, i]).sum()):g}", i
        )
    t = sign_patterns(k) @ v  # (2^(k-1), n)
    t = np.where(t < 0, 0.0, t)
    probs, totals = _normalized(t)
    rate = (ell / 2 ** (k - 1)) * t.T * totals[None, :]
    return _spec(rate, probs, "signed")


def induced_mark_rates(spec):
    """Rate of mark-``j`` children of a mark-``i`` parent, summed over types."""
    return spec.birth_rate @ spec.mark_probs


def kernel_of(construction, *, matrix=None, vectors=None, graph=None, weights=None):
    """The kernel ``A`` each construction is meant to reproduce."""
    if construction in ("rank1", "dot", "signed"):
        v = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        return v.T @ v
    if construction == "kl":
        return np.asarray(graph if graph is not None else matrix, dtype=np.float64)
    if construction == "kl-perturbed":
        a = np.asarray(graph if graph is not None else matrix, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64).ravel()
        return w[:, None] * a * w[None, :]
    return np.asarray(matrix, dtype=np.float64)


def build(construction, ell, *, matrix=None, vectors=None, graph=None, weights=None, partition=None):
    """Construct an :class:`MbpSpec` from a selector string."""
    from .twinpart import twin_partition

    if construction == "rank1":
        v = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        if v.shape[0] != 1:
            raise ConstructionError(f"rank1 needs exactly one vector, got {v.shape[0]}")
        return build_mbp1(v[0], ell)
    if construction == "dot":
        return build_mbp_dot(DotDecomp(vectors), ell)
    if construction == "signed":
        return build_mbp_signed(vectors, ell)
    if construction == "rank2":
        return build_mbp_rank2(SymMatrix(matrix, ell), ell)
    if construction == "full-n":
        return build_bp_n(SymMatrix(matrix, ell))
    if construction in ("kl", "kl-perturbed"):
        a = np.asarray(graph if graph is not None else matrix, dtype=np.float64)
        part = partition if partition is not None else twin_partition(a)
        if construction == "kl":
            return build_mbp_kl(a, part, ell)
        if weights is None:
            raise ConstructionError("kl-perturbed needs a weight vector")
        return build_mbp_kl_perturbed(a, weights, part, ell)
    raise PreconditionError(f"unknown construction {construction!r}; choose from {', '.join(CONSTRUCTIONS)}")


@dataclass(frozen=True)
class MarkedTree:
    """Genealogy in scan order: generation, then parent id, type index, birth order.

    Node 0 is the root (parent -1, type -1 for the distinguished root type).
    ``truncated_generation`` is -1 unless the population cap stopped the run
    while that generation was being produced.
    """

    parent: np.ndarray
    generation: np.ndarray
    type: np.ndarray
    mark: np.ndarray
    n_marks: int
    depth: int
    truncated_generation: int = -1
    thinned: np.ndarray = None

    @property
    def size(self):
        return int(self.mark.size)

    @property
    def truncated(self):
        return self.truncated_generation >= 0

    def rows(self):
        """``(node_id, parent_id, generation, type, mark, thinned)`` tuples."""
        thinned = self.thinned if self.thinned is not None else np.zeros(self.size, dtype=np.uint8)
        return zip(range(self.size), self.parent.tolist(), self.generation.tolist(),
                   self.type.tolist(), self.mark.tolist(), thinned.tolist())


def simulate(spec, root_mark, depth, rng, max_population=DEFAULT_MAX_POP):
    if not 0 <= root_mark < spec.n_marks:
        raise PreconditionError(f"root mark {root_mark} out of range for {spec.n_marks} marks")
    if depth < 0:
        raise PreconditionError("depth must be >= 0")
    if max_population < 1:
        raise PreconditionError("max_population must be >= 1")
    parent, gen, typ, mark, trunc = kernels.simulate_bp(
        spec.birth_rate, spec.mark_cdf(), int(root_mark), int(depth), int(max_population), rng
    )
    return MarkedTree(parent, gen, typ, mark, spec.n_marks, int(depth), int(trunc))


def thin(tree):
    """Delete, in scan order, every particle whose mark already survived, with its subtree.

    Returns the tree with its ``thinned`` flags set (1 = deleted) and the
    per-generation sets of surviving marks.
    """
    keep = kernels.thin_tree(tree.parent, tree.mark, tree.n_marks).astype(bool)
    flagged = MarkedTree(tree.parent, tree.generation, tree.type, tree.mark, tree.n_marks,
                         tree.depth, tree.truncated_generation, (~keep).astype(np.uint8))
    gens = tree.generation[keep]
    marks = tree.mark[keep]
    shells = [marks[gens == g].tolist() for g in range(tree.depth + 1)]
    return flagged, ShellSequence.from_sets(shells)


def thinned_shells(spec, root_mark, depth, rng, max_population=DEFAULT_MAX_POP):
    """``thin(simulate(...))`` reduced to the shell sequence."""
    return thin(simulate(spec, root_mark, depth, rng, max_population))[1]
