"""Command line interface.

Subcommands: learn (CSV in, adjacency CSV + run manifest out), eval
(prediction vs truth adjacency), simulate (fixture dumps) and bench (a
method x beta x sample-size x seed grid producing a metrics report).

Exit codes: 2 usage, 3 ingestion, 4 pipeline, 5 metric computation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .cmi import EstimationError
from .data import IngestionError, load_csv, read_config, sample_rows, write_csv
from .exogenous import AssignmentInfeasibleError, IcaError
from .graph import GraphError, dag_to_cpdag, to_dot
from .metrics import (MetricError, aupr, read_adjacency, shd, to_adjacency,
                      write_adjacency, write_report_csv)
from .pipeline import METHODS, PipelineError, run_pipeline
from .simulate import (DISCRETE_CPT, LINEAR_GAUSSIAN, SimulationError,
                       discrete_cpt_scm, linear_gaussian_scm, random_dag,
                       sample)

EXIT_USAGE = 2
EXIT_INGESTION = 3
EXIT_PIPELINE = 4
EXIT_METRIC = 5

DEFAULT_BETAS = (0.01, 0.05, 0.1, 0.15, 0.2)
DEFAULT_SIZES = tuple(range(400, 1601, 200))


def _float_list(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _int_list(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eembi",
        description="Causal structure learning by exogenous-endogenous "
                    "Markov blanket intersection.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn", help="learn a CPDAG from a CSV table")
    learn.add_argument("--input", required=True)
    learn.add_argument("--output", required=True,
                       help="adjacency CSV destination")
    learn.add_argument("--method", choices=METHODS, default="eembi")
    learn.add_argument("--alpha", type=float, default=None)
    learn.add_argument("--beta", type=float, default=None)
    learn.add_argument("--k", type=int, default=None)
    learn.add_argument("--seed", type=int, default=None)
    learn.add_argument("--config", default=None,
                       help="key=value file: kind.<column>, cutoff, seed, "
                            "alpha, beta, k")
    learn.add_argument("--cutoff", type=int, default=None,
                       help="max distinct integral values for an "
                            "auto-typed discrete column")
    learn.add_argument("--manifest", default=None,
                       help="run manifest path (default: <output>.manifest.json)")
    learn.add_argument("--dot", default=None,
                       help="also write a DOT rendering here")

    ev = sub.add_parser("eval", help="score a predicted adjacency")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--json", action="store_true",
                    help="emit a JSON object instead of plain text")
    ev.add_argument("--dataset", default=None,
                    help="label recorded in JSON output")

    sim = sub.add_parser("simulate", help="dump a synthetic SCM fixture")
    sim.add_argument("--nodes", type=int, required=True)
    sim.add_argument("--edge-prob", type=float, default=0.3)
    sim.add_argument("--mechanism",
                     choices=(LINEAR_GAUSSIAN, DISCRETE_CPT),
                     default=LINEAR_GAUSSIAN)
    sim.add_argument("--rows", type=int, default=1000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out-dir", required=True)

    bench = sub.add_parser(
        "bench", help="metrics over a method x beta x size x seed grid")
    bench.add_argument("--nodes", type=int, default=10)
    bench.add_argument("--edge-prob", type=float, default=0.25)
    bench.add_argument("--mechanism",
                       choices=(LINEAR_GAUSSIAN, DISCRETE_CPT),
                       default=LINEAR_GAUSSIAN)
    bench.add_argument("--methods", default=",".join(METHODS))
    bench.add_argument("--betas", type=_float_list, default=DEFAULT_BETAS)
    bench.add_argument("--sizes", type=_int_list, default=DEFAULT_SIZES)
    bench.add_argument("--seeds", type=int, default=3,
                       help="number of SCM seeds")
    bench.add_argument("--alpha", type=float, default=0.01)
    bench.add_argument("--k", type=int, default=5)
    bench.add_argument("--output", required=True, help="report CSV path")
    bench.add_argument("--workers", type=int,
                       default=int(os.environ.get("EEMBI_WORKERS", "1")))
    return parser


def cmd_learn(args) -> int:
    config = {}
    if args.config:
        config = read_config(args.config)
    cutoff = args.cutoff if args.cutoff is not None else config.get("cutoff", 20)
    d = load_csv(args.input, kind_spec=config.get("kinds") or "auto",
                 cutoff=cutoff)

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return config.get(key, default)

    alpha = pick(args.alpha, "alpha", 0.01)
    beta = pick(args.beta, "beta", None)
    k = pick(args.k, "k", 5)
    seed = pick(args.seed, "seed", 0)
    result = run_pipeline(d, method=args.method, alpha=alpha, beta=beta,
                          k=k, seed=seed)
    write_adjacency(args.output, result.graph)
    manifest_path = args.manifest or (str(args.output) + ".manifest.json")
    result.manifest["input"] = str(args.input)
    result.manifest["output"] = str(args.output)
    with open(manifest_path, "w") as fh:
        json.dump(result.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(to_dot(result.graph, d.names))
    print(f"wrote {args.output} ({result.graph.edge_count()} edges) and "
          f"{manifest_path}")
    return 0


def cmd_eval(args) -> int:
    pred = read_adjacency(args.pred)
    truth = read_adjacency(args.truth)
    scores = {"shd": shd(pred, truth), "aupr": aupr(pred, truth)}
    if args.json:
        payload = dict(scores)
        if args.dataset:
            payload["dataset"] = args.dataset
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"shd={scores['shd']} aupr={scores['aupr']:.6f}")
    return 0


def cmd_simulate(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    dag = random_dag(args.nodes, args.edge_prob, args.seed)
    if args.mechanism == LINEAR_GAUSSIAN:
        scm = linear_gaussian_scm(dag, args.seed)
    else:
        scm = discrete_cpt_scm(dag, args.seed)
    d = sample(scm, args.rows, args.seed)
    dag_path = os.path.join(args.out_dir, "dag.csv")
    cpdag_path = os.path.join(args.out_dir, "cpdag.csv")
    data_path = os.path.join(args.out_dir, "data.csv")
    write_adjacency(dag_path, scm.dag)
    write_adjacency(cpdag_path, dag_to_cpdag(scm.dag))
    write_csv(d, data_path)
    manifest = {
        "version": __version__,
        "nodes": args.nodes,
        "edge_prob": args.edge_prob,
        "mechanism": args.mechanism,
        "rows": args.rows,
        "seed": args.seed,
        "edges": sorted(list(e) for e in scm.dag.directed),
        "files": {"dag": "dag.csv", "cpdag": "cpdag.csv",
                  "data": "data.csv"},
    }
    if scm.mechanism == LINEAR_GAUSSIAN:
        manifest["params"] = {
            "weights": {f"{i}->{j}": w
                        for (i, j), w in sorted(scm.params["weights"].items())},
            "noise_scale": list(scm.params["noise_scale"]),
        }
    else:
        manifest["params"] = {"arities": list(scm.params["arities"])}
    with open(os.path.join(args.out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote fixture to {args.out_dir}")
    return 0


def _bench_cell(spec):
    """One grid cell; top level so process pools can pickle it."""
    (dataset_label, method, beta, size, max_size, seed, alpha, k,
     nodes, edge_prob, mechanism) = spec
    dag = random_dag(nodes, edge_prob, seed)
    if mechanism == LINEAR_GAUSSIAN:
        scm = linear_gaussian_scm(dag, seed)
    else:
        scm = discrete_cpt_scm(dag, seed)
    full = sample(scm, max_size, seed)
    d = sample_rows(full, size, seed)
    t0 = time.perf_counter()
    result = run_pipeline(d, method=method, alpha=alpha, beta=beta, k=k,
                          seed=seed)
    runtime = time.perf_counter() - t0
    truth = to_adjacency(dag_to_cpdag(scm.dag))
    return {
        "dataset": dataset_label,
        "method": method,
        "beta": beta,
        "sample_size": size,
        "seed": seed,
        "shd": shd(result.graph, truth),
        "aupr": round(aupr(result.graph, truth), 6),
        "runtime": round(runtime, 4),
    }


def cmd_bench(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for m in methods:
        if m not in METHODS:
            raise PipelineError(f"unknown method {m!r}")
    label = f"sim-n{args.nodes}-p{args.edge_prob}-{args.mechanism}"
    max_size = max(args.sizes)
    cells = []
    for method in methods:
        for beta in args.betas:
            for size in args.sizes:
                for seed in range(args.seeds):
                    cells.append((label, method, beta, size, max_size, seed,
                                  args.alpha, args.k, args.nodes,
                                  args.edge_prob, args.mechanism))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_bench_cell, cells))
    else:
        rows = [_bench_cell(c) for c in cells]
    rows.sort(key=lambda r: (r["dataset"], r["method"], r["beta"],
                             r["sample_size"], r["seed"]))
    write_report_csv(rows, args.output,
                     fields=["dataset", "method", "beta", "sample_size",
                             "seed", "shd", "aupr", "runtime"])
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"learn": cmd_learn, "eval": cmd_eval,
                "simulate": cmd_simulate, "bench": cmd_bench}
    try:
        return handlers[args.command](args)
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except (PipelineError, EstimationError, IcaError,
            AssignmentInfeasibleError, GraphError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except MetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_METRIC


if __name__ == "__main__":
    sys.exit(main())
