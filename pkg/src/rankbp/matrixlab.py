"""Linear-algebra kernels for rank-k kernels.

Symmetric eigendecomposition (cyclic Jacobi), numeric rank, the rank-2
spectral split, rotation of planar points into the non-negative quadrant,
non-negative rank-2 dot-product factors, and the alternating sign-pattern sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InfeasibleError, NumericalError, PreconditionError, SizeError

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
RANK_TOL = 1e-9
ANGLE_TOL = 1e-9
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric kernel ``A`` with global sparsity parameter ``ell``.

    Set ``nonneg=False`` only for decomposition intermediates.
    """

    entries: np.ndarray
    ell: float = 1.0
    nonneg: bool = field(default=True, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise PreconditionError(f"kernel must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise PreconditionError("kernel entries must be finite")
        if not np.array_equal(a, a.T):
            raise PreconditionError("kernel must be exactly symmetric")
        if self.nonneg and np.any(a < 0):
            raise PreconditionError("kernel entries must be non-negative")
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise PreconditionError(f"ell must be positive and finite, got {self.ell}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "ell", float(self.ell))

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def scale(self):
        return float(np.max(np.abs(self.entries)))


def as_matrix(a, ell=1.0):
    if isinstance(a, SymMatrix):
        return a
    return SymMatrix(np.asarray(a, dtype=np.float64), ell)


@dataclass(frozen=True)
class Rank2Decomp:
    lambda1: float
    lambda2: float
    v1: np.ndarray
    v2: np.ndarray

    def reconstruct(self):
        return self.lambda1 * np.outer(self.v1, self.v1) + self.lambda2 * np.outer(self.v2, self.v2)


@dataclass(frozen=True)
class DotDecomp:
    """Factor vectors ``w_1..w_k`` (rows of ``vectors``) with ``A = sum w_l w_l'``."""

    vectors: np.ndarray
    nonneg: bool = False

    def __post_init__(self):
        v = np.atleast_2d(np.array(self.vectors, dtype=np.float64))
        if v.ndim != 2 or v.size == 0:
            raise PreconditionError("factor vectors must form a non-empty k x n array")
        if self.nonneg and np.any(v < 0):
            raise PreconditionError("factor vectors flagged non-negative contain negative entries")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def k(self):
        return self.vectors.shape[0]

    @property
    def n(self):
        return self.vectors.shape[1]

    def reconstruct(self):
        return self.vectors.T @ self.vectors


def _sign_normalize(u):
    s = float(np.sum(u))
    if s < 0:
        return -u
    if s == 0:
        nz = np.flatnonzero(u)
        if nz.size and u[nz[0]] < 0:
            return -u
    return u


def sym_eigen(a):
    """Eigenvalues (descending) and orthonormal eigenvectors (columns).

    Raises ``NumericalError`` if Jacobi sweeps do not converge within the cap.
    """
    m = a.entries if isinstance(a, SymMatrix) else np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError("sym_eigen needs a square matrix")
    if not np.array_equal(m, m.T):
        raise PreconditionError("sym_eigen needs a symmetric matrix")
    w, v, sweeps, converged = kernels.jacobi_eigh(m, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not converged:
        raise NumericalError(f"Jacobi iteration did not converge in {sweeps} sweeps")
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def numeric_rank(a, tol=RANK_TOL):
    if tol <= 0:
        raise PreconditionError("rank tolerance must be positive")
    w, _ = sym_eigen(a)
    cutoff = tol * max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    return int(np.sum(np.abs(w) > cutoff))


def rank2_spectral(a):
    """Split a non-negative rank-2 kernel as ``lambda1 v1 v1' + lambda2 v2 v2'``."""
    a = as_matrix(a)
    w, v = sym_eigen(a)
    cutoff = RANK_TOL * max(1.0, float(np.max(np.abs(w))))
    nonzero = np.flatnonzero(np.abs(w) > cutoff)
    if nonzero.size != 2:
        raise PreconditionError(f"rank2_spectral needs rank 2, numeric rank is {nonzero.size}")
    i, j = sorted(nonzero, key=lambda idx: -w[idx])
    v1 = _sign_normalize(v[:, i].copy())
    v2 = _sign_normalize(v[:, j].copy())
    return Rank2Decomp(float(w[i]), float(w[j]), v1, v2)


def rotate_to_nonneg(points):
    """Proper rotation ``W`` with ``W @ x_i`` in the closed positive quadrant.

    ``points`` is an ``(n, 2)`` array.  Zero vectors are ignored.  The
    non-zero directions must fit in a closed arc of length at most pi/2;
    the clockwise-most one is rotated onto the positive horizontal axis.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    live = pts[norms > 0]
    if live.shape[0] == 0:
        return np.eye(2)
    theta = np.sort(np.mod(np.arctan2(live[:, 1], live[:, 0]), 2 * math.pi))
    gaps = np.diff(np.concatenate([theta, [theta[0] + 2 * math.pi]]))
    widest = int(np.argmax(gaps))
    arc = 2 * math.pi - float(gaps[widest])
    if arc > math.pi / 2 + ANGLE_TOL:
        raise InfeasibleError(
            f"directions span an arc of {arc:.12g} rad > pi/2; some pair has a negative inner product"
        )
    start = float(theta[(widest + 1) % theta.size])
    c, s = math.cos(start), math.sin(start)
    return np.array([[c, s], [-s, c]])


def psd_rank2_to_dot(a):
    """Non-negative ``w1, w2`` with ``A = w1 w1' + w2 w2'`` for a PSD rank-2 kernel."""
    a = as_matrix(a)
    dec = rank2_spectral(a)
    if dec.lambda2 <= 0:
        raise PreconditionError("psd_rank2_to_dot needs two positive eigenvalues")
    x = np.column_stack([math.sqrt(dec.lambda1) * dec.v1, math.sqrt(dec.lambda2) * dec.v2])
    try:
        rot = rotate_to_nonneg(x)
    except InfeasibleError as exc:  # impossible for a_ij >= 0 up to rounding
        raise NumericalError(f"rotation failed on a non-negative kernel: {exc}") from exc
    y = x @ rot.T
    bound = -CLAMP_TOL * np.hypot(x[:, 0], x[:, 1])[:, None]
    if np.any(y < bound):
        raise NumericalError("rotated factors are negative beyond clamping tolerance")
    y = np.where(y < 0, 0.0, y)
    return DotDecomp(y.T.copy(), nonneg=True)


MAX_ALT_SUM_K = 25


def alt_sum(a, b):
    """Sum of ``(a_1 +- a_2 ... +- a_k)(b_1 +- b_2 ... +- b_k)`` over shared sign patterns."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape or a.size < 1:
        raise PreconditionError("alt_sum needs two vectors of equal length k >= 1")
    k = a.size
    if k > MAX_ALT_SUM_K:
        raise SizeError(f"alt_sum enumerates 2^(k-1) patterns; k={k} exceeds {MAX_ALT_SUM_K}")
    total = 0.0
    for signs in _sign_blocks(k):
        total += float(np.dot(signs @ a, signs @ b))
    return total


def _sign_blocks(k, block=1 << 14):
    count = 1 << (k - 1)
    shifts = np.arange(k - 1, dtype=np.int64)
    for lo in range(0, count, block):
        idx = np.arange(lo, min(lo + block, count), dtype=np.int64)
        bits = (idx[:, None] >> shifts) & 1
        yield np.hstack([np.ones((idx.size, 1)), 1.0 - 2.0 * bits])


def sign_patterns(k):
    """All ``2^(k-1)`` rows ``(1, +-1, ..., +-1)``; in row ``l`` bit ``b`` of ``l`` set means entry ``b+1`` is negated."""
    return np.vstack(list(_sign_blocks(k)))
