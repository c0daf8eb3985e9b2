"""Command-line entry point: ``rankbp <subcommand> [flags]``.

Vertex labels, roots and marks are 1-based on the command line and in every
output file.  Exit status: 0 on pass (or report-only), 1 when a check fails,
2 on invalid input.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bpcore, experiments, fileio, graphgen, twinpart
from .errors import RankBPError
from .matrixlab import SymMatrix
from .rng import check_seed, run_replicates

DEFAULTS = {
    "ell": 1.0,
    "construction": "full-n",
    "root": 1,
    "depth": 2,
    "reps": 1,
    "seed": 0,
    "max_pop": bpcore.DEFAULT_MAX_POP,
    "alpha": 1e-3,
    "tol": 1e-9,
    "threads": 1,
    "mode": "auto",
}
_TYPES = {
    "ell": float, "root": int, "depth": int, "reps": int, "seed": int, "max_pop": int,
    "alpha": float, "tol": float, "threads": int, "n": int, "c": float,
}


class UsageError(RankBPError):
    pass


def _shared(p):
    g = p.add_argument_group("shared options")
    g.add_argument("--config", help="key=value file; flags override its values")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--matrix", help="kernel file: n, then n rows of n decimals")
    src.add_argument("--vectors", help='vectors file: "k n", then k rows of n decimals')
    src.add_argument("--graph", help='edge list "u v" (1-based) for a 0/1 kernel')
    g.add_argument("--weights", help="vectors file (k=1) of vertex weights for kl-perturbed")
    g.add_argument("--ell", type=float, help="global sparsity parameter (default 1)")
    g.add_argument("--construction", choices=bpcore.CONSTRUCTIONS, help="branching-process construction")
    g.add_argument("--root", type=int, help="root vertex / mark, 1-based (default 1)")
    g.add_argument("--depth", type=int, help="exploration depth (default 2)")
    g.add_argument("--reps", type=int, help="replicates (default 1)")
    g.add_argument("--seed", type=int, help="master seed, 64-bit unsigned (default 0)")
    g.add_argument("--max-pop", dest="max_pop", type=int, help="population cap per tree (default 1e6)")
    g.add_argument("--alpha", type=float, help="test level (default 1e-3)")
    g.add_argument("--tol", type=float, help="rate tolerance (default 1e-9)")
    g.add_argument("--threads", type=int, help="worker threads; never changes results (default 1)")
    g.add_argument("--out", help="output path (CSV; summary JSON goes to PATH.json)")


def build_parser():
    parser = argparse.ArgumentParser(prog="rankbp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "rates-check": "certify induced mark rates of a construction against ell*A",
        "sample": "sample G_n(A) and write edge lists",
        "shells": "sample graphs and write neighborhood shells",
        "bp": "simulate and thin a marked branching process",
        "equiv": "compare graph shells with thinned branching-process shells",
        "partition": "canonical twin partition of a 0/1 kernel",
        "giant": "largest-component fraction against the fixed-point reference",
        "sparsity": "sum over i<j of (ell a_ij)^3",
    }
    for name, help_ in specs.items():
        p = sub.add_parser(name, help=help_, description=help_)
        _shared(p)
        if name == "equiv":
            p.add_argument("--mode", choices=("auto", "exact", "mc"),
                           help="exact oracles (n <= 4) or Monte Carlo two-sample test")
        if name == "giant":
            p.add_argument("--n", type=int, help="homogeneous preset: vertex count")
            p.add_argument("--c", type=float, help="homogeneous preset: ell = c/n")
    return parser


def resolve(args):
    """Merge flags over the config file over built-in defaults."""
    cfg = dict(DEFAULTS)
    if args.config:
        for key, value in fileio.read_config(args.config).items():
            cfg[key] = _TYPES.get(key, str)(value)
    for key, value in vars(args).items():
        if value is not None:
            cfg[key] = value
    if cfg["reps"] < 1:
        raise UsageError("--reps must be >= 1")
    if not cfg["tol"] > 0:
        raise UsageError("--tol must be positive")
    cfg["seed"] = check_seed(cfg["seed"])
    return cfg


def load_inputs(cfg):
    out = {}
    if cfg.get("matrix"):
        out["matrix"] = fileio.read_matrix(cfg["matrix"])
    if cfg.get("vectors"):
        out["vectors"] = fileio.read_vectors(cfg["vectors"])
    if cfg.get("graph"):
        out["graph"] = fileio.read_graph(cfg["graph"])
    if cfg.get("weights"):
        out["weights"] = fileio.read_vectors(cfg["weights"])[0]
    return out


def kernel_from(inputs, construction=None):
    if construction:
        return bpcore.kernel_of(construction, **inputs)
    if "matrix" in inputs:
        return inputs["matrix"]
    if "vectors" in inputs:
        v = inputs["vectors"]
        return v.T @ v
    if "graph" in inputs:
        a = inputs["graph"]
        if "weights" in inputs:
            w = inputs["weights"]
            a = w[:, None] * a * w[None, :]
        return a
    raise UsageError("one of --matrix, --vectors or --graph is required")


def construction_inputs(construction, inputs):
    """Inputs in the shape ``bpcore.build`` expects for ``construction``."""
    if construction in ("rank1", "dot", "signed"):
        if "vectors" not in inputs:
            raise UsageError(f"construction {construction} needs --vectors")
        return {"vectors": inputs["vectors"]}
    if construction in ("kl", "kl-perturbed"):
        a = inputs.get("graph", inputs.get("matrix"))
        if a is None:
            raise UsageError(f"construction {construction} needs --graph or --matrix")
        out = {"graph": a}
        if construction == "kl-perturbed":
            if "weights" not in inputs:
                raise UsageError("construction kl-perturbed needs --weights")
            out["weights"] = inputs["weights"]
        return out
    return {"matrix": kernel_from(inputs)}


def graph_sampler(inputs, ell):
    """``(n, sample(rng) -> Graph, sampler name)`` for the kernel the inputs describe."""
    if "vectors" in inputs and "matrix" not in inputs:
        v = inputs["vectors"]
        if np.all(v >= 0):
            if v.shape[0] == 1:
                return v.shape[1], lambda rng: graphgen.sample_rank1_graph(v[0], ell, rng), "rank1-skip"
            return v.shape[1], lambda rng: graphgen.collapse_construction(v, ell, rng), "collapse"
    sampler = graphgen.GraphSampler(SymMatrix(kernel_from(inputs), ell))
    return sampler.matrix.n, sampler, "dense"


def _emit(cfg, header, rows, summary):
    out = cfg.get("out")
    if out:
        fileio.write_csv(out, header, rows)
        with open(out + ".json", "w") as fh:
            fh.write(fileio.dump_json(summary))
    else:
        fileio.write_csv(sys.stdout, header, rows)
        sys.stderr.write(fileio.dump_json(summary))


def _emit_json(cfg, report):
    text = fileio.dump_json(report)
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _status(decision):
    return 1 if decision in ("fail", "reject") else 0


def _root0(cfg, n):
    root = cfg["root"] - 1
    if not 0 <= root < n:
        raise UsageError(f"--root must be in 1..{n}")
    return root


def cmd_rates_check(cfg):
    construction = cfg["construction"]
    inputs = construction_inputs(construction, load_inputs(cfg))
    report = experiments.rates_check(construction, cfg["ell"], cfg["tol"], **inputs)
    _emit_json(cfg, report)
    return _status(report["decision"])


def cmd_sample(cfg):
    n, sample, how = graph_sampler(load_inputs(cfg), cfg["ell"])
    graphs = run_replicates(lambda r, rng: sample(rng), cfg["seed"], cfg["reps"], cfg["threads"])
    rows = [(r, int(u) + 1, int(v) + 1) for r, g in enumerate(graphs) for u, v in g.edges.tolist()]
    counts = [int(g.edges.shape[0]) for g in graphs]
    summary = {
        "command": "sample", "sampler": how, "n": n, "ell": cfg["ell"], "seed": cfg["seed"], "reps": cfg["reps"],
        "mean_edges": float(np.mean(counts)),
        "mean_self_loops": float(np.mean([g.n_self_loops for g in graphs])),
    }
    _emit(cfg, ("replicate", "u", "v"), rows, summary)
    return 0


def cmd_shells(cfg):
    n, sample, how = graph_sampler(load_inputs(cfg), cfg["ell"])
    root, depth = _root0(cfg, n), cfg["depth"]
    runs = run_replicates(lambda r, rng: graphgen.neighborhood_shells(sample(rng), root, depth),
                          cfg["seed"], cfg["reps"], cfg["threads"])
    rows = []
    for r, s in enumerate(runs):
        for d in range(depth + 1):
            shell = s.shells[d] if d < len(s.shells) else ()
            rows.append((r, d, len(shell), ";".join(str(x + 1) for x in shell)))
    sizes = np.array([s.sizes(depth) for s in runs], dtype=np.float64).reshape(len(runs), depth)
    summary = {
        "command": "shells", "sampler": how, "n": n, "ell": cfg["ell"], "root": root + 1, "depth": depth,
        "seed": cfg["seed"], "reps": cfg["reps"],
        "mean_shell_sizes": sizes.mean(axis=0).tolist(),
    }
    _emit(cfg, ("replicate", "depth", "shell_size", "shell_members"), rows, summary)
    return 0


def cmd_bp(cfg):
    construction = cfg["construction"]
    inputs = construction_inputs(construction, load_inputs(cfg))
    spec = bpcore.build(construction, cfg["ell"], **inputs)
    root, depth = _root0(cfg, spec.n_marks), cfg["depth"]

    def one(r, rng):
        return bpcore.thin(bpcore.simulate(spec, root, depth, rng, cfg["max_pop"]))

    runs = run_replicates(one, cfg["seed"], cfg["reps"], cfg["threads"])
    rows = []
    for r, (tree, _) in enumerate(runs):
        for node, par, gen, typ, mark, thinned in tree.rows():
            rows.append((r, node, "" if par < 0 else par, gen, typ + 1, mark + 1, thinned))
    sizes = np.array([s.sizes(depth) for _, s in runs], dtype=np.float64).reshape(len(runs), depth)
    summary = {
        "command": "bp", "construction": construction, "n_marks": spec.n_marks, "n_types": spec.n_types,
        "ell": cfg["ell"], "root": root + 1, "depth": depth, "seed": cfg["seed"], "reps": cfg["reps"],
        "max_pop": cfg["max_pop"],
        "mean_thinned_shell_sizes": sizes.mean(axis=0).tolist(),
        "mean_tree_size": float(np.mean([t.size for t, _ in runs])),
        "truncated_runs": int(sum(t.truncated for t, _ in runs)),
    }
    _emit(cfg, ("replicate", "node_id", "parent_id", "generation", "type", "mark", "thinned"), rows, summary)
    return 0


def cmd_equiv(cfg):
    construction = cfg["construction"]
    inputs = construction_inputs(construction, load_inputs(cfg))
    a = SymMatrix(bpcore.kernel_of(construction, **inputs), cfg["ell"])
    spec = bpcore.build(construction, cfg["ell"], **inputs)
    root, depth = _root0(cfg, a.n), cfg["depth"]
    mode = cfg["mode"]
    if mode == "auto":
        mode = "exact" if a.n <= graphgen.MAX_BRUTE_N else "mc"
    if mode == "exact":
        report = experiments.equivalence_exact(a, root, depth, cfg["reps"], cfg["seed"], construction,
                                               spec, cfg["threads"], alpha=cfg["alpha"])
    else:
        report, _, _ = experiments.equivalence_mc(a, root, depth, cfg["reps"], cfg["seed"], construction,
                                                  spec, cfg["threads"], alpha=cfg["alpha"])
    _emit_json(cfg, report)
    return _status(report["decision"])


def cmd_partition(cfg):
    raw = load_inputs(cfg)
    a = raw.get("graph", raw.get("matrix"))
    if a is None:
        raise UsageError("partition needs --graph or --matrix")
    _emit_json(cfg, twinpart.partition_report(a))
    return 0


def cmd_giant(cfg):
    if cfg.get("n") is not None or cfg.get("c") is not None:
        if cfg.get("n") is None or cfg.get("c") is None:
            raise UsageError("the homogeneous preset needs both --n and --c")
        n, c = cfg["n"], cfg["c"]
        if n < 1 or not c > 0:
            raise UsageError("--n must be >= 1 and --c > 0")
        sample, how = experiments.homogeneous_sampler(n, c), "rank1-skip"
    else:
        n, sample, how = graph_sampler(load_inputs(cfg), cfg["ell"])
        c = None
    sizes = experiments.giant_runs(sample, n, cfg["reps"], cfg["seed"], cfg["threads"])
    summary = experiments.giant_report(sizes, n, c, cfg["seed"])
    summary.update({"command": "giant", "sampler": how})
    rows = [(r, s, s / n) for r, s in enumerate(sizes)]
    _emit(cfg, ("replicate", "largest_component", "fraction"), rows, summary)
    return _status(summary["decision"])


def cmd_sparsity(cfg):
    a = SymMatrix(kernel_from(load_inputs(cfg)), cfg["ell"])
    _emit_json(cfg, {"command": "sparsity", "n": a.n, "ell": a.ell, "sparsity": graphgen.sparsity_diagnostic(a)})
    return 0


COMMANDS = {
    "rates-check": cmd_rates_check,
    "sample": cmd_sample,
    "shells": cmd_shells,
    "bp": cmd_bp,
    "equiv": cmd_equiv,
    "partition": cmd_partition,
    "giant": cmd_giant,
    "sparsity": cmd_sparsity,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (RankBPError, OSError, ValueError) as exc:
        print(f"rankbp {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
