"""Command-line entry point.

Subcommands: ``generate`` (two-moons point clouds, planted-partition graphs),
``build-graph`` (k-NN similarity graph from a feature file), ``partition``
(the solver, with fixed / sweep / recursive community-count strategies and
optional supervision), and ``metrics`` (agreement scores for label files).
Set BALANCED_TV_THREADS to run repeated seeds in parallel.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import io
from .build import knn_graph, planted_partition, two_moons
from .eigen import DiffusionOperator, smallest_eigenpairs
from .graph import Supervision, modularity
from .mbo import MboConfig, mbo_run
from .metrics import RunBatch, classification_rate, consistency, purity
from .partition import (
    CommunitySweep,
    FixedCommunities,
    PartitionStrategy,
    RecursiveSplit,
    recursive_partition,
    sweep_nhat,
)

__all__ = ["RunSpec", "parse_args", "run", "main"]


@dataclass
class RunSpec:
    """A parsed and validated command line."""

    command: str
    options: argparse.Namespace
    mbo_config: MboConfig | None = None
    strategy: PartitionStrategy | None = None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="balancedtv",
        description="Community detection by balanced-TV modularity optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthetic benchmark data")
    gen_sub = gen.add_subparsers(dest="generator", required=True)
    moons = gen_sub.add_parser("two-moons", help="two noisy interlocking arcs")
    moons.add_argument("--n", type=int, default=2000, help="number of points")
    moons.add_argument("--dim", type=int, default=100, help="ambient dimension")
    moons.add_argument("--noise", type=float, default=0.14, help="Gaussian noise std")
    moons.add_argument("--seed", type=int, default=0)
    moons.add_argument("--out", required=True, help="feature CSV to write")
    moons.add_argument("--labels-out", help="ground-truth CSV to write")
    planted = gen_sub.add_parser("planted", help="planted-partition random graph")
    planted.add_argument("--n", type=int, default=400)
    planted.add_argument("--communities", type=int, default=8)
    planted.add_argument("--degree-in", type=float, default=10.0)
    planted.add_argument("--degree-out", type=float, default=1.0)
    planted.add_argument("--seed", type=int, default=0)
    planted.add_argument("--out", required=True, help="edge-list file to write")
    planted.add_argument("--labels-out", help="ground-truth CSV to write")

    build = sub.add_parser("build-graph", help="k-NN graph from features")
    build.add_argument("--features", required=True)
    build.add_argument("--knn", type=int, default=13, metavar="K")
    build.add_argument("--scaling-neighbor", type=int, metavar="S",
                       help="neighbor index for the self-tuning scale (default K)")
    build.add_argument("--out", required=True, help="edge-list file to write")

    part = sub.add_parser("partition", help="find communities")
    source = part.add_mutually_exclusive_group(required=True)
    source.add_argument("--edges", help="edge-list input file")
    source.add_argument("--features", help="feature CSV input file")
    part.add_argument("--knn", type=int, default=13, metavar="K")
    part.add_argument("--scaling-neighbor", type=int, metavar="S")
    part.add_argument("--gamma", type=float, default=1.0)
    strat = part.add_mutually_exclusive_group(required=True)
    strat.add_argument("--nhat", type=int, help="fixed community count")
    strat.add_argument("--sweep", metavar="MIN..MAX",
                       help="try each count in the range, keep the best modularity")
    strat.add_argument("--recursive", action="store_true",
                       help="recursive splitting gated on modularity gain")
    part.add_argument("--split-factor", type=int, default=2)
    part.add_argument("--min-size", type=int, default=4)
    part.add_argument("--gain-tol", type=float, default=1e-10)
    part.add_argument("--neig", type=int, help="eigenpairs to retain (default 5*nhat)")
    part.add_argument("--dt", type=float, help="explicit timestep override")
    part.add_argument("--seed", type=int, default=0)
    part.add_argument("--repeat", type=int, default=1)
    part.add_argument("--supervision", help="CSV node,label of known labels")
    part.add_argument("--supervision-weight", type=float, default=100.0)
    part.add_argument("--truth", help="ground-truth CSV for scoring")
    part.add_argument("--out", required=True, metavar="PREFIX")
    part.add_argument("--trace", action="store_true",
                      help="write the best run's per-iteration energy trace")

    met = sub.add_parser("metrics", help="score label files")
    met.add_argument("--pred", required=True)
    met.add_argument("--truth", required=True)
    met.add_argument("--batch", help="batch CSV from a partition run")
    met.add_argument("--tol", type=float, default=0.02)
    return parser


def parse_args(argv) -> RunSpec:
    """Resolve a command line into a validated :class:`RunSpec`.

    Raises SystemExit(2) with a message naming the offending flag or file on
    any usage error.
    """
    parser = _build_parser()
    options = parser.parse_args(argv)

    for attr in ("edges", "features", "supervision", "truth", "pred", "batch"):
        path = getattr(options, attr, None)
        if path is not None and not os.path.isfile(path):
            parser.error(f"--{attr.replace('_', '-')}: cannot read file {path!r}")
    if getattr(options, "repeat", 1) < 1:
        parser.error("--repeat: must be at least 1")

    spec = RunSpec(command=options.command, options=options)
    if options.command == "partition":
        if options.recursive:
            if options.supervision:
                parser.error("--supervision: not supported with --recursive")
            spec.strategy = RecursiveSplit(
                options.split_factor, options.min_size, options.gain_tol
            )
            nhat = options.split_factor
        elif options.sweep is not None:
            pieces = options.sweep.split("..")
            if len(pieces) != 2 or not all(p.isdigit() for p in pieces):
                parser.error(f"--sweep: expected MIN..MAX, got {options.sweep!r}")
            lo, hi = int(pieces[0]), int(pieces[1])
            if not 1 <= lo <= hi:
                parser.error("--sweep: need 1 <= MIN <= MAX")
            spec.strategy = CommunitySweep(lo, hi)
            nhat = hi
        else:
            if options.nhat < 1:
                parser.error("--nhat: must be at least 1")
            spec.strategy = FixedCommunities(options.nhat)
            nhat = options.nhat
        try:
            spec.mbo_config = MboConfig(
                gamma=options.gamma,
                nhat=nhat,
                n_eig=options.neig,
                dt=options.dt,
                seed=options.seed,
            )
        except ValueError as exc:
            parser.error(str(exc))
    return spec


def _thread_count() -> int:
    raw = os.environ.get("BALANCED_TV_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _load_graph(options):
    if options.edges:
        return io.load_edge_list(options.edges)
    features = io.load_features(options.features)
    return knn_graph(features, options.knn, options.scaling_neighbor)


def _partition_once(graph, basis, strategy, config, supervision, seed):
    seeded = MboConfig(
        gamma=config.gamma, nhat=config.nhat, n_eig=config.n_eig, dt=config.dt,
        decay_epsilon=config.decay_epsilon, max_iters=config.max_iters,
        seed=seed, refine=config.refine, refine_factor=config.refine_factor,
    )
    start = time.perf_counter()
    if isinstance(strategy, RecursiveSplit):
        labels = recursive_partition(
            graph, config.gamma, seeded,
            split_factor=strategy.split_factor,
            min_size=strategy.min_size,
            gain_tol=strategy.gain_tol,
        )
        q = modularity(graph, labels, config.gamma)
        result = None
    elif isinstance(strategy, CommunitySweep):
        result = sweep_nhat(
            graph, config.gamma,
            range(strategy.nhat_min, strategy.nhat_max + 1),
            seeded, supervision=supervision, basis=basis,
        )
        labels, q = result.labels, result.modularity
    else:
        result = mbo_run(graph, basis, seeded, supervision=supervision)
        labels, q = result.labels, result.modularity
    elapsed_ms = 1000.0 * (time.perf_counter() - start)
    return labels, q, result, elapsed_ms


def _run_partition(spec: RunSpec) -> int:
    options, config, strategy = spec.options, spec.mbo_config, spec.strategy
    graph = _load_graph(options)
    truth = io.load_labels(options.truth) if options.truth else None
    if truth is not None and truth.size != graph.n_nodes:
        raise ValueError(
            f"truth file covers {truth.size} nodes, graph has {graph.n_nodes}"
        )

    supervision = None
    if options.supervision:
        nodes, sup_labels = io.load_label_pairs(options.supervision)
        supervision = Supervision.from_labels(
            nodes, sup_labels, config.nhat, options.supervision_weight
        )

    basis = None
    if not isinstance(strategy, RecursiveSplit):
        n_eig = config.resolved_n_eig(graph.n_nodes)
        if isinstance(strategy, CommunitySweep):
            n_eig = min(max(n_eig, 5 * strategy.nhat_max), graph.n_nodes)
        basis = smallest_eigenpairs(
            DiffusionOperator(graph, config.gamma), n_eig, seed=config.seed
        )

    seeds = list(range(config.seed, config.seed + options.repeat))
    jobs = [(graph, basis, strategy, config, supervision, s) for s in seeds]
    workers = min(_thread_count(), len(seeds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda a: _partition_once(*a), jobs))
    else:
        outcomes = [_partition_once(*job) for job in jobs]

    rows = []
    for seed, (labels, q, _result, ms) in zip(seeds, outcomes):
        cls = classification_rate(labels, truth) if truth is not None else None
        rows.append((seed, q, cls, ms))

    best_idx = int(np.argmax([row[1] for row in rows]))
    best_labels = outcomes[best_idx][0]
    io.save_labels(f"{options.out}_labels.csv", best_labels)
    with open(f"{options.out}_batch.csv", "w") as fh:
        fh.write("seed,modularity,classification,wall_time_ms\n")
        for seed, q, cls, ms in rows:
            cls_text = "" if cls is None else repr(cls)
            fh.write(f"{seed},{q!r},{cls_text},{ms:.3f}\n")
    if options.trace:
        result = outcomes[best_idx][2]
        with open(f"{options.out}_trace.csv", "w") as fh:
            fh.write("iteration,balanced_tv,modularity\n")
            if result is not None:
                for i, (tv, q) in enumerate(
                    zip(result.energy_trace, result.modularity_trace), start=1
                ):
                    fh.write(f"{i},{float(tv)!r},{float(q)!r}\n")

    print(f"runs: {len(rows)}")
    print(f"best modularity: {max(row[1] for row in rows):.6f}")
    if truth is not None:
        print(f"best classification: {max(row[2] for row in rows):.6f}")
    print(f"median wall time: {statistics.median(row[3] for row in rows):.1f} ms")
    return 0


def _run_generate(options) -> int:
    if options.generator == "two-moons":
        features, labels = two_moons(options.n, options.dim, options.noise, options.seed)
        io.save_features(options.out, features)
    else:
        graph, labels = planted_partition(
            options.n, options.communities, options.degree_in,
            options.degree_out, options.seed,
        )
        io.save_edge_list(options.out, graph)
    if options.labels_out:
        io.save_labels(options.labels_out, labels)
    print(f"wrote {options.out}")
    return 0


def _run_build_graph(options) -> int:
    features = io.load_features(options.features)
    graph = knn_graph(features, options.knn, options.scaling_neighbor)
    io.save_edge_list(options.out, graph)
    print(f"wrote {options.out}: {graph.n_nodes} nodes, {graph.n_edges} edges")
    return 0


def _run_metrics(options) -> int:
    pred = io.load_labels(options.pred)
    truth = io.load_labels(options.truth)
    print(f"purity: {purity(pred, truth):.6f}")
    print(f"classification: {classification_rate(pred, truth):.6f}")
    if options.batch:
        mods, classes = [], []
        with open(options.batch) as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) < 3:
                    continue
                mods.append(float(parts[1]))
                if parts[2]:
                    classes.append(float(parts[2]))
        batch = RunBatch(np.array(mods), np.array(classes))
        print(f"modularity consistency (tol {options.tol}): "
              f"{consistency(batch, 'modularity', options.tol):.6f}")
        if classes:
            print(f"classification consistency (tol {options.tol}): "
                  f"{consistency(batch, 'classification', options.tol):.6f}")
    return 0


def run(spec: RunSpec) -> int:
    """Execute a parsed command; returns the process exit code."""
    if spec.command == "generate":
        return _run_generate(spec.options)
    if spec.command == "build-graph":
        return _run_build_graph(spec.options)
    if spec.command == "partition":
        return _run_partition(spec)
    if spec.command == "metrics":
        return _run_metrics(spec.options)
    raise ValueError(f"unknown command {spec.command!r}")


def main(argv=None) -> int:
    spec = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        return run(spec)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
