"""Command-line front end.

One command writes one artifact.  Every JSON output carries the fully
resolved run configuration and a SHA-256 of each input file; the CSV from
``sweep`` gets the same record in a ``<out>.meta.json`` sidecar.

Exit status:
  0  success
  2  usage error (bad or missing flag)
  3  input file missing or unreadable
  4  invalid input data or parameters
  5  brute-force size guard exceeded
"""
import argparse
import hashlib
import json
import os
import sys

from . import cluster as clustering
from . import simgraph
from .evaluate import budget_curve, curve_csv, score_selection
from .greedy import BruteForceLimitError, SelectionResult, brute_force, greedy_lazy, greedy_naive
from .objective import DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_K, ObjectiveParams, SelectionError
from .pool import PoolError, dumps, load_ground_truth, load_pool, save_ground_truth, save_pool
from .synth import SynthConfig, SynthError, generate

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_INVALID, EXIT_GUARD = 0, 2, 3, 4, 5


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _nonneg_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _provenance(args, inputs):
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {"config": config, "inputs": {name: _sha256(path) for name, path in inputs.items()}}


def _write_json(path, doc):
    with open(path, "w") as fh:
        fh.write(dumps(doc))


# ------------------------------------------------------------------ commands

def cmd_synth(args):
    cfg = SynthConfig(
        seed=args.seed, grid=tuple(args.grid), num_objects=args.num_objects,
        num_layers=args.num_layers, parts_per_object=args.parts,
        background_tiles=args.background_tiles, reward_noise_std=args.reward_noise,
        feature_noise_std=args.feature_noise, num_classes=args.num_classes)
    pool, gt = generate(cfg)
    meta = _provenance(args, {})
    save_pool(pool, args.pool_out, meta=meta)
    save_ground_truth(gt, args.gt_out, meta=meta)


def _graph(args, pool):
    if args.graph_cache:
        with open(args.pool, "rb") as fh:
            key = simgraph.graph_cache_key(fh.read(), args.M, args.adjacency_dilation)
        if os.path.exists(args.graph_cache):
            graph = simgraph.load_graph(args.graph_cache, key)
            if graph is not None and graph.n == len(pool):
                return graph
        graph = simgraph.build_graph(pool, args.M, args.adjacency_dilation)
        simgraph.save_graph(graph, args.graph_cache, key)
        return graph
    return simgraph.build_graph(pool, args.M, args.adjacency_dilation)


def _policy(args):
    per_layer = tuple(args.clusters_per_layer) if args.clusters_per_layer else None
    return clustering.ClusterPolicy(args.coarse_threshold, per_layer)


def _clusters(args, pool, graph):
    if getattr(args, "clusters", None):
        return clustering.load_assignment(pool, args.clusters)
    return clustering.cluster_pool(pool, graph, _policy(args))


def _inputs(args, *names):
    return {n: getattr(args, n) for n in names if getattr(args, n, None)}


def cmd_cluster(args):
    pool = load_pool(args.pool, args.reward_transform)
    graph = _graph(args, pool)
    assignment = clustering.cluster_pool(pool, graph, _policy(args))
    clustering.save_assignment(pool, assignment, args.out, meta=_provenance(args, _inputs(args, "pool")))


def cmd_select(args):
    pool = load_pool(args.pool, args.reward_transform)
    if args.k > len(pool):
        raise SelectionError(f"--k {args.k} exceeds the pool size {len(pool)}")
    graph = _graph(args, pool)
    assignment = _clusters(args, pool, graph)
    params = ObjectiveParams(args.alpha, args.beta, args.k)
    if args.command == "oracle":
        result = brute_force(pool, graph, assignment, params, limit=args.limit)
    else:
        algorithm = greedy_lazy if args.algorithm == "lazy" else greedy_naive
        result = algorithm(pool, graph, assignment, params)
    doc = result.to_dict()
    doc.update(_provenance(args, _inputs(args, "pool", "clusters")))
    _write_json(args.out, doc)


def _load_selection(path):
    with open(path) as fh:
        doc = json.load(fh)
    try:
        return SelectionResult.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise PoolError(f"{path}: not a selection result ({exc})") from None


def cmd_eval(args):
    pool = load_pool(args.pool, args.reward_transform)
    gt = load_ground_truth(args.gt, pool.grid)
    selection = _load_selection(args.selection)
    k = args.k if args.k is not None else len(selection.order)
    metrics = score_selection(selection.order, pool, gt, k)
    doc = {"metrics": metrics.to_dict()}
    doc.update(_provenance(args, _inputs(args, "pool", "gt", "selection")))
    _write_json(args.out, doc)


def cmd_sweep(args):
    pool = load_pool(args.pool, args.reward_transform)
    gt = load_ground_truth(args.gt, pool.grid)
    selection = _load_selection(args.selection)
    k_max = args.k_max if args.k_max is not None else len(selection.order)
    rows, auc = budget_curve(selection.order, pool, gt, k_max, args.step)
    with open(args.out, "w") as fh:
        fh.write(curve_csv(rows))
    meta = {"auc_budget": auc}
    meta.update(_provenance(args, _inputs(args, "pool", "gt", "selection")))
    _write_json(args.out + ".meta.json", meta)


# -------------------------------------------------------------------- parser

def _graph_flags(p):
    p.add_argument("--pool", required=True, help="segment pool JSON")
    p.add_argument("--M", type=_positive_int, default=simgraph.DEFAULT_M,
                   help="neighbour rank for the local scale (default %(default)s)")
    p.add_argument("--adjacency-dilation", type=_nonneg_int, default=simgraph.DEFAULT_DILATION,
                   help="same-layer adjacency dilation in cells (default %(default)s)")
    p.add_argument("--graph-cache", default=None, help="graph cache file to reuse or create")
    p.add_argument("--reward-transform", choices=["none", "logistic"], default="none",
                   help="map raw scores s to 1/(1+exp(-s)) before validation")
    p.add_argument("--coarse-threshold", type=_nonneg_int, default=clustering.DEFAULT_COARSE_THRESHOLD,
                   help="layers this small get one cluster per segment (default %(default)s)")
    p.add_argument("--clusters-per-layer", type=_positive_int, nargs="+", default=None,
                   help="explicit cluster count for every layer")


def _select_flags(p):
    _graph_flags(p)
    p.add_argument("--clusters", default=None, help="precomputed cluster file")
    p.add_argument("--k", type=_positive_int, default=DEFAULT_K, help="selection size (default %(default)s)")
    p.add_argument("--alpha", type=_nonneg_float, default=DEFAULT_ALPHA, help="diversity weight (default %(default)s)")
    p.add_argument("--beta", type=_nonneg_float, default=DEFAULT_BETA, help="reward weight (default %(default)s)")
    p.add_argument("--out", required=True)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="subprop", description="Submodular selection of object proposals.",
        epilog="exit status: 0 ok, 2 usage error, 3 missing input file, "
               "4 invalid input data, 5 brute-force guard exceeded",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic pool and its ground truth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=_positive_int, nargs=2, default=[64, 64], metavar=("W", "H"))
    p.add_argument("--num-objects", type=_positive_int, default=3)
    p.add_argument("--num-layers", type=_positive_int, default=3)
    p.add_argument("--parts", type=_positive_int, default=2)
    p.add_argument("--background-tiles", type=_positive_int, default=16)
    p.add_argument("--reward-noise", type=_nonneg_float, default=0.0)
    p.add_argument("--feature-noise", type=_nonneg_float, default=0.0)
    p.add_argument("--num-classes", type=_positive_int, default=3)
    p.add_argument("--pool-out", required=True)
    p.add_argument("--gt-out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="write exemplar cluster assignments")
    _graph_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("select", help="greedy proposal selection")
    _select_flags(p)
    p.add_argument("--algorithm", choices=["naive", "lazy"], default="lazy")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("oracle", help="exhaustive optimum for small pools")
    _select_flags(p)
    p.add_argument("--limit", type=_positive_int, default=10**6, help="maximum subsets to enumerate")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="score a selection against ground truth")
    p.add_argument("--pool", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--selection", required=True)
    p.add_argument("--k", type=_positive_int, default=None, help="budget (default: whole selection)")
    p.add_argument("--reward-transform", choices=["none", "logistic"], default="none")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="recall/J_i against budget as CSV")
    p.add_argument("--pool", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--selection", required=True)
    p.add_argument("--k-max", type=_positive_int, default=None)
    p.add_argument("--step", type=_positive_int, default=1)
    p.add_argument("--reward-transform", choices=["none", "logistic"], default="none")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"subprop {args.command}: cannot read {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_MISSING
    except BruteForceLimitError as exc:
        print(f"subprop {args.command}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (PoolError, SynthError, SelectionError, ValueError) as exc:
        print(f"subprop {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
