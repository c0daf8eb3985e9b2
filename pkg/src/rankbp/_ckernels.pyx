# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Same contracts and draw order as ``_pykernels``."""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport expm1, log, log1p, floor, sqrt, hypot, fabs, copysign
from libc.stdlib cimport realloc, free
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_poisson, random_standard_uniform

import numpy as np

BACKEND = "cython"


cdef inline bitgen_t *_bitgen(object bit_generator) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


cdef struct Buf:
    long long *data
    Py_ssize_t size
    Py_ssize_t cap


cdef int buf_push(Buf *b, long long x) noexcept nogil:
    cdef long long *tmp
    if b.size == b.cap:
        b.cap = 2 * b.cap if b.cap else 64
        tmp = <long long *> realloc(b.data, b.cap * sizeof(long long))
        if tmp == NULL:
            return -1
        b.data = tmp
    b.data[b.size] = x
    b.size += 1
    return 0


cdef object buf_to_array(Buf *b):
    out = np.empty(b.size, dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i
    for i in range(b.size):
        o[i] = b.data[i]
    return out


def jacobi_eigh(a, double tol, int max_sweeps):
    cdef double[:, ::1] m = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = m.shape[0]
    vmat = np.eye(n)
    cdef double[:, ::1] v = vmat
    cdef Py_ssize_t p, q, k
    cdef double fro = 0.0, off, apq, tau, t, c, s, x, y
    cdef int sweeps = 0
    cdef bint converged = False
    for p in range(n):
        for q in range(n):
            fro += m[p, q] * m[p, q]
    fro = sqrt(fro)
    with nogil:
        while True:
            off = 0.0
            for p in range(n):
                for q in range(n):
                    if p != q:
                        off += m[p, q] * m[p, q]
            if sqrt(off) <= tol * fro:
                converged = True
                break
            if sweeps >= max_sweeps:
                break
            sweeps += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = m[p, q]
                    if apq == 0.0:
                        continue
                    tau = (m[q, q] - m[p, p]) / (2.0 * apq)
                    t = copysign(1.0, tau) / (fabs(tau) + hypot(1.0, tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for k in range(n):
                        x = m[k, p]
                        y = m[k, q]
                        m[k, p] = c * x - s * y
                        m[k, q] = s * x + c * y
                    for k in range(n):
                        x = m[p, k]
                        y = m[q, k]
                        m[p, k] = c * x - s * y
                        m[q, k] = s * x + c * y
                    m[p, q] = 0.0
                    m[q, p] = 0.0
                    for k in range(n):
                        x = v[k, p]
                        y = v[k, q]
                        v[k, p] = c * x - s * y
                        v[k, q] = s * x + c * y
    w = np.empty(n)
    for p in range(n):
        w[p] = m[p, p]
    return w, vmat, sweeps, bool(converged)


def sample_rank1_edges(w, double ell, gen):
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0]
    bg = gen.bit_generator
    cdef bitgen_t *rng = _bitgen(bg)
    cdef Buf out
    out.data = NULL
    out.size = 0
    out.cap = 0
    cdef Py_ssize_t i, j
    cdef double wi, q, p, u, skip
    cdef int err = 0
    with bg.lock, nogil:
        for i in range(n):
            wi = wv[i]
            if random_standard_uniform(rng) < -expm1(-ell * wi * wi):
                err |= buf_push(&out, i)
                err |= buf_push(&out, i)
            j = i + 1
            if j >= n:
                continue
            q = -expm1(-ell * wi * wv[j])
            while j < n and q > 0.0:
                if q < 1.0:
                    u = 1.0 - random_standard_uniform(rng)
                    skip = floor(log(u) / log1p(-q))
                    if j + skip >= n:
                        break
                    j += <Py_ssize_t> skip
                p = -expm1(-ell * wi * wv[j])
                if random_standard_uniform(rng) < p / q:
                    err |= buf_push(&out, i)
                    err |= buf_push(&out, j)
                q = p
                j += 1
    try:
        if err:
            raise MemoryError()
        return buf_to_array(&out).reshape(-1, 2)
    finally:
        free(out.data)


def bfs_shells(Py_ssize_t n, edges, Py_ssize_t root, int depth):
    cdef const long long[:, ::1] e = np.ascontiguousarray(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
    cdef Py_ssize_t m = e.shape[0]
    deg_arr = np.zeros(n + 1, dtype=np.int64)
    cdef long long[::1] ptr = deg_arr
    nbr_arr = np.empty(2 * m, dtype=np.int64)
    cdef long long[::1] nbr = nbr_arr
    fill_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] fill = fill_arr
    seen_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] seen = seen_arr
    members_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] members = members_arr
    offsets_arr = np.empty(depth + 2, dtype=np.int64)
    cdef long long[::1] offsets = offsets_arr
    cdef Py_ssize_t k, u, v, a, b, head, tail, level, nshell
    with nogil:
        for k in range(m):
            u = e[k, 0]
            v = e[k, 1]
            if u != v:
                ptr[u + 1] += 1
                ptr[v + 1] += 1
        for k in range(n):
            ptr[k + 1] += ptr[k]
            fill[k] = ptr[k]
        for k in range(m):
            u = e[k, 0]
            v = e[k, 1]
            if u != v:
                nbr[fill[u]] = v
                fill[u] += 1
                nbr[fill[v]] = u
                fill[v] += 1
        seen[root] = 1
        members[0] = root
        offsets[0] = 0
        offsets[1] = 1
        nshell = 1
        head = 0
        tail = 1
        for level in range(depth):
            a = tail
            for k in range(head, tail):
                u = members[k]
                for b in range(ptr[u], ptr[u + 1]):
                    v = nbr[b]
                    if not seen[v]:
                        seen[v] = 1
                        members[a] = v
                        a += 1
            if a == tail:
                break
            head = tail
            tail = a
            nshell += 1
            offsets[nshell] = tail
    return members_arr[:tail].copy(), offsets_arr[:nshell + 1].copy()


cdef inline Py_ssize_t _draw_mark(const double *row, Py_ssize_t n, double u) noexcept nogil:
    # smallest j with row[j] > u
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if row[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


def simulate_bp(rates, cdf, long long root_mark, int depth, Py_ssize_t max_pop, gen):
    cdef const double[:, ::1] r = np.ascontiguousarray(rates, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef Py_ssize_t n_types = r.shape[1], n_marks = c.shape[1]
    counts_arr = np.zeros(max(n_types, 1), dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    bg = gen.bit_generator
    cdef bitgen_t *rng = _bitgen(bg)
    cdef Buf parent, genb, typ, mark
    parent.data = NULL; parent.size = 0; parent.cap = 0
    genb.data = NULL; genb.size = 0; genb.cap = 0
    typ.data = NULL; typ.size = 0; typ.cap = 0
    mark.data = NULL; mark.size = 0; mark.cap = 0
    cdef Py_ssize_t start = 0, stop = 1, node, t, j, total, g
    cdef long long mk
    cdef int err = 0
    cdef long long truncated = -1
    err |= buf_push(&parent, -1)
    err |= buf_push(&genb, 0)
    err |= buf_push(&typ, -1)
    err |= buf_push(&mark, root_mark)
    with bg.lock, nogil:
        for g in range(1, depth + 1):
            if start == stop or truncated >= 0 or err:
                break
            for node in range(start, stop):
                mk = mark.data[node]
                total = 0
                for t in range(n_types):
                    counts[t] = random_poisson(rng, r[mk, t])
                    total += counts[t]
                if total == 0:
                    continue
                if mark.size + total > max_pop:
                    truncated = g
                    break
                for t in range(n_types):
                    for j in range(counts[t]):
                        err |= buf_push(&parent, node)
                        err |= buf_push(&genb, g)
                        err |= buf_push(&typ, t)
                        err |= buf_push(&mark, _draw_mark(&c[t, 0], n_marks, random_standard_uniform(rng)))
            start = stop
            stop = mark.size
    try:
        if err:
            raise MemoryError()
        return (buf_to_array(&parent), buf_to_array(&genb), buf_to_array(&typ),
                buf_to_array(&mark), int(truncated))
    finally:
        free(parent.data)
        free(genb.data)
        free(typ.data)
        free(mark.data)


def thin_tree(parent, mark, Py_ssize_t n_marks):
    cdef const long long[::1] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef const long long[::1] mk = np.ascontiguousarray(mark, dtype=np.int64)
    cdef Py_ssize_t m = mk.shape[0], i
    keep_arr = np.zeros(m, dtype=np.uint8)
    if m == 0:
        return keep_arr
    cdef unsigned char[::1] keep = keep_arr
    seen_arr = np.zeros(n_marks, dtype=np.uint8)
    cdef unsigned char[::1] seen = seen_arr
    with nogil:
        keep[0] = 1
        seen[mk[0]] = 1
        for i in range(1, m):
            if keep[par[i]] and not seen[mk[i]]:
                keep[i] = 1
                seen[mk[i]] = 1
    return keep_arr


cdef inline Py_ssize_t _find(long long *up, Py_ssize_t x) noexcept nogil:
    while up[x] != x:
        up[x] = up[up[x]]
        x = up[x]
    return x


def largest_component(Py_ssize_t n, edges):
    if n == 0:
        return 0
    cdef const long long[:, ::1] e = np.ascontiguousarray(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
    up_arr = np.arange(n, dtype=np.int64)
    size_arr = np.ones(n, dtype=np.int64)
    cdef long long[::1] up = up_arr
    cdef long long[::1] size = size_arr
    cdef Py_ssize_t k, ru, rv, tmp, best = 1
    with nogil:
        for k in range(e.shape[0]):
            ru = _find(&up[0], e[k, 0])
            rv = _find(&up[0], e[k, 1])
            if ru == rv:
                continue
            if size[ru] < size[rv]:
                tmp = ru
                ru = rv
                rv = tmp
            up[rv] = ru
            size[ru] += size[rv]
            if size[ru] > best:
                best = size[ru]
    return int(best)
