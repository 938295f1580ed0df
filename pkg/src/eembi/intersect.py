"""Parent recovery by intersecting endogenous and exogenous blankets.

For each node i the blanket of its exogenous variable e_i is grown inside
S = MB_i U {i}: conditioning on x_i opens the collider x_i <- e_i, so
exactly the parents of i stay dependent with e_i, and every member of the
exogenous blanket other than x_i itself is emitted as a parent of i.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .blankets import _resolve
from .cmi import DEFAULT_K, KnnCmiEstimator
from .graph import Graph

DEFAULT_BETA_DISCRETE = 0.01
DEFAULT_BETA_CONTINUOUS = 0.05


def default_beta(d) -> float:
    """0.01 when every column is discrete, else 0.05."""
    if d is None:
        return DEFAULT_BETA_DISCRETE
    return (DEFAULT_BETA_DISCRETE if d.all_discrete
            else DEFAULT_BETA_CONTINUOUS)


def _augmented_estimator(d, exogenous, k: int,
                         cmi: Callable | None) -> tuple[Callable, int]:
    if cmi is not None:
        n = getattr(cmi, "n_endogenous", None)
        if n is None:
            n_vars = getattr(cmi, "n_vars", None)
            if n_vars is None:
                if d is None:
                    raise ValueError("cannot infer variable count")
                n = d.n_cols
            else:
                n = n_vars // 2
        return cmi, int(n)
    if d is None or exogenous is None:
        raise ValueError(
            "data and matched exogenous columns are required without an "
            "estimator override")
    if getattr(exogenous, "matched", True) is False:
        raise ValueError("exogenous columns must be matched first")
    evals = exogenous.values if hasattr(exogenous, "values") else exogenous
    stacked = np.hstack([d.values, np.asarray(evals, dtype=np.float64)])
    return KnnCmiEstimator(stacked, k=k), d.n_cols


def exogenous_blanket(i: int, blanket: Sequence[int], est: Callable,
                      n: int, beta: float) -> list[int]:
    """Members of MB(e_i) found inside MB_i U {i}, in discovery order.

    Forward: add the j maximizing I(e_i; x_j | mbe) while above beta
    (lowest index on ties).  Backward: scan a snapshot ascending and drop
    any j != i whose I(e_i; x_j | mbe \\ {j}) falls below beta.
    """
    e_col = (n + i,)
    pool = sorted(set(blanket) | {i})
    mbe: list[int] = []
    while pool:
        best_j = None
        best_v = -float("inf")
        cond = tuple(sorted(mbe))
        for j in pool:
            v = est(e_col, (j,), cond)
            if v > best_v:
                best_j, best_v = j, v
        if best_v > beta:
            mbe.append(best_j)
            pool.remove(best_j)
        else:
            break
    kept = set(mbe)
    for j in sorted(mbe):
        if j == i:
            continue
        v = est(e_col, (j,), tuple(sorted(kept - {j})))
        if v < beta:
            kept.discard(j)
    return sorted(kept)


def intersect_markov_blankets(d, exogenous, blankets,
                              beta: float | None = None, k: int = DEFAULT_K,
                              *, cmi: Callable | None = None,
                              return_supports: bool = False):
    """Directed graph of recovered parent sets.

    Every l in MB(e_i) \\ {i} becomes an edge l -> i.  If both directions
    of a pair are recovered (possible only under estimation noise), the
    direction with the larger supporting statistic
    I(e_i; x_l | MB(e_i) \\ {l}) survives; longer directed cycles are left
    for the pipeline to repair.  With return_supports=True also returns
    (supports, dropped) where supports maps each emitted edge to its
    statistic and dropped counts discarded two-cycle directions.
    """
    est, n = _augmented_estimator(d, exogenous, k, cmi)
    if len(blankets) != n:
        raise ValueError(f"got {len(blankets)} blankets for {n} variables")
    if beta is None:
        beta = default_beta(d)
    supports: dict[tuple[int, int], float] = {}
    for i in range(n):
        mbe = exogenous_blanket(i, blankets[i], est, n, beta)
        final = set(mbe)
        for l in mbe:
            if l == i:
                continue
            supports[(l, i)] = est((n + i,), (l,),
                                   tuple(sorted(final - {l})))
    dropped = 0
    edges = {}
    for (a, b), stat in sorted(supports.items()):
        if (b, a) in edges:
            if stat > edges[(b, a)]:
                del edges[(b, a)]
                edges[(a, b)] = stat
            dropped += 1
        else:
            edges[(a, b)] = stat
    g = Graph(n, directed=edges.keys())
    if return_supports:
        return g, dict(edges), dropped
    return g
