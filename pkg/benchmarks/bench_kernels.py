"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat R] [--quick]

Both backends consume the same random streams, so each pair of timings
below runs literally the same computation; the script checks that too.
"""

import argparse
import time

import numpy as np

from rankbp import _pykernels, bpcore, kernels
from rankbp.matrixlab import JACOBI_MAX_SWEEPS, JACOBI_TOL
from rankbp.rng import replicate_stream


def cases(quick):
    rng = np.random.default_rng(0)
    n_eig = 20 if quick else 40
    m = rng.normal(size=(n_eig, n_eig))
    sym = (m + m.T) / 2

    n_graph = 20_000 if quick else 100_000
    w = np.ones(n_graph)
    ell = 2.0 / n_graph

    x, y = rng.uniform(0.5, 1.5, (2, 50))
    spec = bpcore.build("rank2", 1.5 / 50, matrix=np.outer(x, y) + np.outer(y, x))
    cdf = spec.mark_cdf()

    edges = np.asarray(_pykernels.sample_rank1_edges(w, ell, replicate_stream(1)))
    parent, _, _, mark, _ = _pykernels.simulate_bp(spec.birth_rate, cdf, 0, 6, 10**6, replicate_stream(2))

    return {
        "jacobi_eigh": lambda k: k.jacobi_eigh(sym, JACOBI_TOL, JACOBI_MAX_SWEEPS)[0],
        "sample_rank1_edges": lambda k: k.sample_rank1_edges(w, ell, replicate_stream(1)),
        "simulate_bp": lambda k: k.simulate_bp(spec.birth_rate, cdf, 0, 6, 10**6, replicate_stream(2))[3],
        "thin_tree": lambda k: k.thin_tree(parent, mark, 50),
        "bfs_shells": lambda k: k.bfs_shells(n_graph, edges, 0, 10)[0],
        "largest_component": lambda k: np.int64(k.largest_component(n_graph, edges)),
    }


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--quick", action="store_true", help="smaller inputs")
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; run: python3 setup.py build_ext --inplace")
        return 1
    cy, py = backends["cython"], backends["python"]
    print(f"{'kernel':<20} {'cython s':>10} {'python s':>10} {'speedup':>8}  same")
    for name, fn in cases(args.quick).items():
        tc, oc = best_of(lambda: fn(cy), args.repeat)
        tp, op = best_of(lambda: fn(py), args.repeat)
        same = np.allclose(oc, op) if name == "jacobi_eigh" else np.array_equal(oc, op)
        print(f"{name:<20} {tc:>10.4f} {tp:>10.4f} {tp / tc:>7.1f}x  {'yes' if same else 'NO'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
