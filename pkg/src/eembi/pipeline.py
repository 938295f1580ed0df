"""End-to-end structure learning: blankets, exogenous matching,
intersection, then either CPDAG conversion (eembi) or a restricted PC
orientation pass (eembi-pc).

Both entry points accept an optional `cmi` estimator override following
the (x_cols, y_cols, z_cols) -> float convention with exogenous column i
addressed as index n + i.  With an override (such as the d-separation
oracle) the ICA and matching stage is skipped: the override already
answers exogenous queries, identity-matched.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

from . import __version__
from .blankets import DEFAULT_ALPHA, MarkovBlankets, improved_iamb
from .cmi import DEFAULT_K, KnnCmiEstimator
from .data import Dataset, normalize_minmax
from .exogenous import (DEFAULT_MAX_ITER, DEFAULT_TOL, DEFAULT_ZERO_EPS,
                        generate_exogenous, match_exogenous)
from .graph import (Graph, find_directed_cycle, is_acyclic, dag_to_cpdag,
                    meek_closure, skeleton)
from .intersect import default_beta, intersect_markov_blankets

METHODS = ("eembi", "eembi-pc")


class PipelineError(RuntimeError):
    """Raised when a learning stage cannot proceed."""


@dataclass
class LearnResult:
    graph: Graph
    manifest: dict


def pc_v_structures(skel: Graph, d: Dataset | None,
                    alpha: float = DEFAULT_ALPHA, k: int = DEFAULT_K, *,
                    cmi: Callable | None = None,
                    return_conflicts: bool = False):
    """Collider orientation on a fixed skeleton.

    For each unshielded triple i - j - k the conditioning sets Z run over
    subsets of (adj(i) U adj(k)) \\ {i, k} in increasing size (then
    lexicographic); the first Z with I(x_i; x_k | Z) < alpha is the
    separating set and the triple is oriented i -> j <- k iff j is not in
    it.  Triples are processed in (j, i, k) order; an orientation that
    contradicts an earlier one is dropped and counted instead.
    """
    if skel.directed:
        raise PipelineError("pc_v_structures expects an undirected skeleton")
    if cmi is None:
        if d is None:
            raise PipelineError("pc_v_structures needs data or an estimator")
        cmi = KnnCmiEstimator(d, k=k)
    n = skel.n
    triples = []
    for j in range(n):
        nbrs = sorted(skel.neighbors(j))
        for i, k_ in itertools.combinations(nbrs, 2):
            if not skel.adjacent(i, k_):
                triples.append((i, j, k_))
    triples.sort(key=lambda t: (t[1], t[0], t[2]))

    sepsets: dict[tuple[int, int], tuple | None] = {}

    def separating_set(i, k_):
        key = (i, k_)
        if key in sepsets:
            return sepsets[key]
        pool = sorted((skel.adjacent_to(i) | skel.adjacent_to(k_)) - {i, k_})
        found = None
        for size in range(len(pool) + 1):
            for z in itertools.combinations(pool, size):
                if cmi((i,), (k_,), z) < alpha:
                    found = z
                    break
            if found is not None:
                break
        sepsets[key] = found
        return found

    oriented: dict[tuple[int, int], bool] = {}
    conflicts = 0
    for i, j, k_ in triples:
        z = separating_set(i, k_)
        if z is None or j in z:
            continue
        for tail in (i, k_):
            if (j, tail) in oriented:
                conflicts += 1
            else:
                oriented[(tail, j)] = True
    undirected = set()
    for a, b in skel.undirected:
        if (a, b) not in oriented and (b, a) not in oriented:
            undirected.add((a, b))
    out = Graph(n, directed=oriented.keys(), undirected=undirected)
    if return_conflicts:
        return out, conflicts
    return out


def _repair_cycles(g: Graph, supports: dict[tuple[int, int], float]):
    """Delete the weakest-support edge of each directed cycle found."""
    removed = 0
    edges = dict(supports)
    current = g
    while not is_acyclic(current):
        cycle = find_directed_cycle(current)
        victim = min(cycle, key=lambda e: (edges.get(e, float("inf")), e))
        edges.pop(victim, None)
        removed += 1
        current = Graph(current.n,
                        directed=set(current.directed) - {victim})
    return current, removed


def run_pipeline(d: Dataset | None, method: str = "eembi",
                 alpha: float = DEFAULT_ALPHA, beta: float | None = None,
                 k: int = DEFAULT_K, seed: int = 0,
                 zero_eps: float = DEFAULT_ZERO_EPS,
                 tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                 cmi: Callable | None = None) -> LearnResult:
    """Run a full pipeline and collect a manifest of the run.

    The manifest records the configuration, per-stage wall times and the
    repair counters; it is JSON-serializable.
    """
    if method not in METHODS:
        raise PipelineError(f"unknown method {method!r}; expected one of "
                            f"{METHODS}")
    if beta is None:
        beta = default_beta(d)
    oracle_mode = cmi is not None
    counters = {"cycle_edges_removed": 0, "v_structure_conflicts": 0,
                "ica_components_nonconverged": 0}
    stages = []
    t_start = time.perf_counter()

    def stage_done(name, t0):
        stages.append({"name": name,
                       "seconds": round(time.perf_counter() - t0, 6)})

    if oracle_mode:
        endo_est = cmi
        aug_est = cmi
        matching = {"skipped": True}
        d_norm = d
    else:
        if d is None:
            raise PipelineError("a dataset is required without an estimator")
        d_norm = normalize_minmax(d)
        endo_est = KnnCmiEstimator(d_norm, k=k)

    t0 = time.perf_counter()
    blankets = improved_iamb(d_norm, alpha, k, cmi=endo_est)
    stage_done("markov_blankets", t0)

    if not oracle_mode:
        t0 = time.perf_counter()
        try:
            exo = generate_exogenous(d_norm, seed, tol=tol,
                                     max_iter=max_iter)
            matched = match_exogenous(d_norm, exo, k=k, zero_eps=zero_eps)
        except Exception as exc:
            raise PipelineError(f"exogenous stage failed: {exc}") from exc
        counters["ica_components_nonconverged"] = int(
            sum(not c for c in exo.ica.converged))
        matching = {"skipped": False,
                    "permutation": list(matched.permutation),
                    "identity": list(matched.permutation)
                    == list(range(d_norm.n_cols)),
                    "binarized": matched.binarized}
        stage_done("exogenous", t0)
        aug_est = None

    t0 = time.perf_counter()
    if oracle_mode:
        directed, supports, two_cycle_drops = intersect_markov_blankets(
            d_norm, None, blankets, beta, k, cmi=aug_est,
            return_supports=True)
    else:
        directed, supports, two_cycle_drops = intersect_markov_blankets(
            d_norm, matched, blankets, beta, k, return_supports=True)
    counters["cycle_edges_removed"] += two_cycle_drops
    stage_done("intersection", t0)

    t0 = time.perf_counter()
    if method == "eembi":
        repaired, removed = _repair_cycles(directed, supports)
        counters["cycle_edges_removed"] += removed
        out = dag_to_cpdag(repaired)
        stage_done("cpdag", t0)
    else:
        skel = skeleton(directed)
        pattern, conflicts = pc_v_structures(skel, d_norm, alpha, k,
                                             cmi=endo_est,
                                             return_conflicts=True)
        counters["v_structure_conflicts"] = conflicts
        closed = meek_closure(pattern)
        out = Graph(closed.n, directed=closed.directed,
                    undirected=closed.undirected, kind="cpdag")
        stage_done("pc_orientation", t0)

    manifest = {
        "version": __version__,
        "method": method,
        "config": {"alpha": alpha, "beta": beta, "k": k, "seed": seed,
                   "zero_eps": zero_eps, "ica_tol": tol,
                   "ica_max_iter": max_iter},
        "oracle_mode": oracle_mode,
        "n_rows": None if d is None else d.n_rows,
        "n_cols": out.n,
        "blanket_sizes": [len(b) for b in blankets],
        "matching": matching,
        "stages": stages,
        "counters": counters,
        "total_seconds": round(time.perf_counter() - t_start, 6),
    }
    return LearnResult(out, manifest)


def eembi(d: Dataset | None, alpha: float = DEFAULT_ALPHA,
          beta: float | None = None, k: int = DEFAULT_K, seed: int = 0, *,
          cmi: Callable | None = None) -> Graph:
    """CPDAG estimate via blanket intersection and cycle-repaired
    conversion."""
    return run_pipeline(d, "eembi", alpha, beta, k, seed, cmi=cmi).graph


def eembi_pc(d: Dataset | None, alpha: float = DEFAULT_ALPHA,
             beta: float | None = None, k: int = DEFAULT_K, seed: int = 0, *,
             cmi: Callable | None = None) -> Graph:
    """CPDAG estimate via blanket intersection, PC-style collider search
    on the intersected skeleton and Meek closure."""
    return run_pipeline(d, "eembi-pc", alpha, beta, k, seed, cmi=cmi).graph
