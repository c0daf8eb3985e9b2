"""Plain-text input and output formats (1-based vertex labels on disk)."""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import PreconditionError


def _tokens(path):
    with open(path) as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    return [ln for ln in lines if ln]


def read_matrix(path):
    """First line ``n``, then ``n`` rows of ``n`` whitespace-separated decimals."""
    lines = _tokens(path)
    if not lines:
        raise PreconditionError(f"{path}: empty matrix file")
    n = int(lines[0])
    rows = [[float(x) for x in ln.split()] for ln in lines[1:]]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise PreconditionError(f"{path}: expected {n} rows of {n} values")
    return np.array(rows, dtype=np.float64).reshape(n, n)


def write_matrix(path, a):
    a = np.asarray(a)
    with open(path, "w") as fh:
        fh.write(f"{a.shape[0]}\n")
        for row in a:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def read_vectors(path):
    """First line ``k n``, then ``k`` rows of ``n`` decimals; returns a ``(k, n)`` array."""
    lines = _tokens(path)
    if not lines:
        raise PreconditionError(f"{path}: empty vectors file")
    k, n = (int(x) for x in lines[0].split())
    rows = [[float(x) for x in ln.split()] for ln in lines[1:]]
    if len(rows) != k or any(len(r) != n for r in rows):
        raise PreconditionError(f"{path}: expected {k} rows of {n} values")
    return np.array(rows, dtype=np.float64).reshape(k, n)


def write_vectors(path, v):
    v = np.atleast_2d(np.asarray(v))
    with open(path, "w") as fh:
        fh.write(f"{v.shape[0]} {v.shape[1]}\n")
        for row in v:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def read_graph(path, n=None):
    """Edge list ``u v`` (1-based, ``u u`` for self-loops) to a 0/1 adjacency matrix.

    A line holding a single integer declares the vertex count; otherwise
    ``n`` is the largest label seen.
    """
    edges = []
    declared = n
    for ln in _tokens(path):
        parts = ln.split()
        if len(parts) == 1:
            declared = int(parts[0])
            continue
        if len(parts) != 2:
            raise PreconditionError(f"{path}: bad edge line {ln!r}")
        u, v = int(parts[0]), int(parts[1])
        if u < 1 or v < 1:
            raise PreconditionError(f"{path}: vertex labels are 1-based, got {ln!r}")
        edges.append((u - 1, v - 1))
    size = declared if declared is not None else (max(max(e) for e in edges) + 1 if edges else 0)
    a = np.zeros((size, size))
    for u, v in edges:
        if u >= size or v >= size:
            raise PreconditionError(f"{path}: vertex {max(u, v) + 1} exceeds n={size}")
        a[u, v] = a[v, u] = 1.0
    return a


def write_graph_edges(fh, edges):
    for u, v in np.asarray(edges).reshape(-1, 2).tolist():
        fh.write(f"{u + 1} {v + 1}\n")


def read_config(path):
    """``key=value`` lines; ``#`` starts a comment.  Keys use flag spelling ('max-pop' or 'max_pop')."""
    out = {}
    for ln in _tokens(path):
        if "=" not in ln:
            raise PreconditionError(f"{path}: expected key=value, got {ln!r}")
        key, value = ln.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def write_csv(path_or_fh, header, rows):
    if hasattr(path_or_fh, "write"):
        w = csv.writer(path_or_fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_fh, "w", newline="") as fh:
        write_csv(fh, header, rows)


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")
