"""Pure-Python implementations of the hot kernels.

These mirror ``_ckernels.pyx`` call for call: each kernel consumes random
draws from the supplied ``numpy.random.Generator`` in exactly the same order
as the compiled version, so both backends produce identical output for the
same stream.  Keep the two files in lockstep.
"""

import math

import numpy as np

BACKEND = "python"


def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps, converged)``; eigenvalues are
    unsorted (diagonal order) and eigenvectors are the columns of the second
    array.  Convergence means the off-diagonal Frobenius norm dropped to
    ``tol * ||A||_F``.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    fro = math.sqrt(float(np.sum(a * a)))
    threshold = tol * fro
    sweeps = 0
    converged = False
    while True:
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= threshold:
            converged = True
            break
        if sweeps >= max_sweeps:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps, converged


def sample_rank1_edges(w, ell, rng):
    """Sample edges with ``p_ij = 1 - exp(-ell * w_i * w_j)`` for ``i <= j``.

    ``w`` must be sorted in non-increasing order.  Off-diagonal pairs use
    geometric skipping over a row with acceptance ``p/q`` (Miller-Hagberg), so
    the cost is proportional to the number of edges plus ``n``.  Returns an
    ``(m, 2)`` int64 array of index pairs into ``w``.
    """
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0]
    out = []
    rand = rng.random
    for i in range(n):
        wi = w[i]
        if rand() < -math.expm1(-ell * wi * wi):
            out.append((i, i))
        j = i + 1
        if j >= n:
            continue
        q = -math.expm1(-ell * wi * w[j])
        while j < n and q > 0.0:
            if q < 1.0:
                u = 1.0 - rand()
                skip = math.floor(math.log(u) / math.log1p(-q))
                if j + skip >= n:
                    break
                j += int(skip)
            p = -math.expm1(-ell * wi * w[j])
            if rand() < p / q:
                out.append((i, j))
            q = p
            j += 1
    if not out:
        return np.empty((0, 2), dtype=np.int64)
    return np.array(out, dtype=np.int64)


def _adjacency(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges.tolist():
        if u != v:
            adj[u].append(v)
            adj[v].append(u)
    return adj


def bfs_shells(n, edges, root, depth):
    """Breadth-first shells from ``root``; self-loops are ignored.

    Returns ``(members, offsets)``: shell ``k`` is
    ``members[offsets[k]:offsets[k + 1]]``.  Only non-empty shells are
    reported and at most ``depth + 1`` of them.
    """
    adj = _adjacency(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))
    seen = bytearray(n)
    seen[root] = 1
    members = [root]
    offsets = [0, 1]
    current = [root]
    for _ in range(depth):
        nxt = []
        for u in current:
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = 1
                    nxt.append(v)
        if not nxt:
            break
        members.extend(nxt)
        offsets.append(len(members))
        current = nxt
    return np.array(members, dtype=np.int64), np.array(offsets, dtype=np.int64)


def simulate_bp(rates, cdf, root_mark, depth, max_pop, rng):
    """Generation-by-generation simulation of a marked multi-type Poisson BP.

    ``rates[i, t]`` is the Poisson rate of type-``t`` children of a mark-``i``
    parent; ``cdf[t]`` is the cumulative mark distribution of type ``t``.
    For each parent (in node order) all type counts are drawn first, then
    the marks of the children type by type.  Returns
    ``(parent, generation, type, mark, truncated_generation)``; the root has
    parent and type -1, and ``truncated_generation`` is -1 unless the node
    count would have exceeded ``max_pop``.
    """
    rates = np.asarray(rates, dtype=np.float64)
    cdf = np.asarray(cdf, dtype=np.float64)
    n_types = rates.shape[1]
    parent = [-1]
    gen = [0]
    typ = [-1]
    mark = [int(root_mark)]
    truncated = -1
    start, stop = 0, 1
    for g in range(1, depth + 1):
        if start == stop or truncated >= 0:
            break
        for node in range(start, stop):
            counts = rng.poisson(rates[mark[node]])
            total = int(counts.sum())
            if total == 0:
                continue
            if len(mark) + total > max_pop:
                truncated = g
                break
            u = rng.random(total)
            pos = 0
            for t in range(n_types):
                c = int(counts[t])
                if c == 0:
                    continue
                marks = np.searchsorted(cdf[t], u[pos:pos + c], side="right")
                pos += c
                parent.extend([node] * c)
                gen.extend([g] * c)
                typ.extend([t] * c)
                mark.extend(marks.tolist())
        start, stop = stop, len(mark)
    return (
        np.array(parent, dtype=np.int64),
        np.array(gen, dtype=np.int64),
        np.array(typ, dtype=np.int64),
        np.array(mark, dtype=np.int64),
        truncated,
    )


def thin_tree(parent, mark, n_marks):
    """Keep mask after breadth-first thinning of repeated marks.

    Nodes must be in scan order (their id order).  A node survives iff its
    parent survived and its mark has not been seen among surviving nodes.
    """
    parent = np.asarray(parent, dtype=np.int64).tolist()
    mark = np.asarray(mark, dtype=np.int64).tolist()
    keep = bytearray(len(mark))
    seen = bytearray(n_marks)
    if not mark:
        return np.zeros(0, dtype=np.uint8)
    keep[0] = 1
    seen[mark[0]] = 1
    for i in range(1, len(mark)):
        m = mark[i]
        if keep[parent[i]] and not seen[m]:
            keep[i] = 1
            seen[m] = 1
    return np.frombuffer(bytes(keep), dtype=np.uint8).copy()


def largest_component(n, edges):
    """Size of the largest connected component (union-find; self-loops ignored)."""
    if n == 0:
        return 0
    up = list(range(n))
    size = [1] * n

    def find(x):
        while up[x] != x:
            up[x] = up[up[x]]
            x = up[x]
        return x

    for u, v in np.asarray(edges, dtype=np.int64).reshape(-1, 2).tolist():
        ru, rv = find(u), find(v)
        if ru == rv:
            continue
        if size[ru] < size[rv]:
            ru, rv = rv, ru
        up[rv] = ru
        size[ru] += size[rv]
    return max(size[find(x)] for x in range(n))
