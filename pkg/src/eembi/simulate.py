"""Synthetic structural causal models with known ground truth.

Two mechanism families: linear-Gaussian (zero-avoiding weights, unit
Gaussian noise scaled per node) and discrete CPTs (Dirichlet rows, with a
faithfulness audit so conditional independence matches d-separation).
The d-separation oracle built from an SCM answers CI queries over the
augmented graph that includes one exogenous parent per node, so it can
replace the kNN estimator in any pipeline stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .cmi import JointTable, exact_cmi_discrete
from .data import Dataset
from .graph import Graph, GraphError, d_separated, topological_order


class SimulationError(RuntimeError):
    """Raised when SCM generation cannot satisfy its constraints."""


LINEAR_GAUSSIAN = "linear-gaussian"
DISCRETE_CPT = "discrete-cpt"

_WEIGHT_LO, _WEIGHT_HI = 0.3, 1.0
_NOISE_LO, _NOISE_HI = 0.5, 1.0
_CPT_ROW_GAP = 0.05         # min l-inf gap between rows differing in one parent
_AUDIT_MIN_DEP = 1e-4       # d-connected pairs must carry at least this CMI


@dataclass(frozen=True)
class Scm:
    """A DAG plus parameterized mechanisms.

    params holds {"weights": {(i, j): w}, "noise_scale": (...)} for
    linear-Gaussian models and {"arities": (...), "cpts": {node: array}}
    for discrete ones (CPT axes: sorted parents, then the node itself).
    """

    dag: Graph
    mechanism: str
    params: dict = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        if self.mechanism not in (LINEAR_GAUSSIAN, DISCRETE_CPT):
            raise SimulationError(f"unknown mechanism {self.mechanism!r}")
        if self.dag.undirected:
            raise SimulationError("Scm requires a fully directed DAG")


def random_dag(n: int, edge_prob: float, seed: int) -> Graph:
    """Random DAG: draw a node order, keep each forward edge with edge_prob."""
    if not (0.0 <= edge_prob <= 1.0):
        raise ValueError(f"edge_prob must be in [0, 1], got {edge_prob}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < edge_prob:
                edges.append((int(order[a]), int(order[b])))
    return Graph(n, directed=edges, kind="dag")


def linear_gaussian_scm(dag: Graph, seed: int) -> Scm:
    """Weights uniform on +-[0.3, 1.0], noise std uniform on [0.5, 1.0]."""
    rng = np.random.default_rng(seed)
    weights = {}
    for i, j in sorted(dag.directed):
        w = rng.uniform(_WEIGHT_LO, _WEIGHT_HI)
        if rng.random() < 0.5:
            w = -w
        weights[(i, j)] = float(w)
    noise = tuple(float(s) for s in rng.uniform(_NOISE_LO, _NOISE_HI, dag.n))
    return Scm(dag, LINEAR_GAUSSIAN,
               {"weights": weights, "noise_scale": noise}, seed)


def _rows_well_separated(cpt: np.ndarray, parent_arities: tuple[int, ...]) -> bool:
    """Rows that differ in a single parent value must differ by the gap."""
    if not parent_arities:
        return True
    rows = cpt.reshape(-1, cpt.shape[-1])
    strides = np.ones(len(parent_arities), dtype=int)
    for a in range(len(parent_arities) - 2, -1, -1):
        strides[a] = strides[a + 1] * parent_arities[a + 1]
    for flat in range(rows.shape[0]):
        idx = [(flat // strides[a]) % parent_arities[a]
               for a in range(len(parent_arities))]
        for a, ar in enumerate(parent_arities):
            for v in range(idx[a] + 1, ar):
                other = flat + (v - idx[a]) * strides[a]
                if np.max(np.abs(rows[flat] - rows[other])) < _CPT_ROW_GAP:
                    return False
    return True


def joint_table(scm: Scm) -> JointTable:
    """The exact joint distribution of a discrete-CPT SCM."""
    if scm.mechanism != DISCRETE_CPT:
        raise SimulationError("joint_table requires a discrete-CPT SCM")
    arities = scm.params["arities"]
    n = scm.dag.n
    probs = np.ones(arities)
    for i in range(n):
        parents = sorted(scm.dag.parents(i))
        cpt = scm.params["cpts"][i]
        axes = parents + [i]
        order = np.argsort(axes)  # cpt axes reordered by node index
        arranged = np.transpose(cpt, order)
        shape = [arities[v] if v in axes else 1 for v in range(n)]
        probs = probs * arranged.reshape(shape)
    return JointTable(probs)


def _audit_faithful(scm: Scm, max_subset: int | None = None) -> bool:
    table = joint_table(scm)
    n = scm.dag.n
    cap = n - 2 if max_subset is None else max_subset
    for i, j in combinations(range(n), 2):
        rest = [v for v in range(n) if v not in (i, j)]
        for size in range(0, cap + 1):
            for cond in combinations(rest, size):
                sep = d_separated(scm.dag, {i}, {j}, cond)
                cmi = exact_cmi_discrete(table, (i,), (j,), cond)
                if sep and cmi > 1e-9:
                    return False
                if not sep and cmi < _AUDIT_MIN_DEP:
                    return False
    return True


def discrete_cpt_scm(dag: Graph, seed: int, max_tries: int = 60) -> Scm:
    """Dirichlet(1) CPTs with arities in {2, 3}, redrawn until faithful.

    Rows too close across a single-parent flip are redrawn immediately;
    the assembled model is then audited against d-separation with exact
    CMI and rejected as a whole on any disagreement.
    """
    max_subset = None if dag.n <= 8 else 2
    for attempt in range(max_tries):
        rng = np.random.default_rng((seed, attempt))
        arities = tuple(int(a) for a in rng.integers(2, 4, dag.n))
        cpts = {}
        for i in range(dag.n):
            parents = sorted(dag.parents(i))
            p_arities = tuple(arities[p] for p in parents)
            n_rows = int(np.prod(p_arities)) if p_arities else 1
            for _ in range(200):
                rows = rng.dirichlet(np.ones(arities[i]), size=n_rows)
                cpt = rows.reshape(p_arities + (arities[i],))
                if _rows_well_separated(cpt, p_arities):
                    cpts[i] = cpt
                    break
        if len(cpts) != dag.n:
            continue
        scm = Scm(dag, DISCRETE_CPT, {"arities": arities, "cpts": cpts},
                  seed)
        if _audit_faithful(scm, max_subset):
            return scm
    raise SimulationError(
        f"no faithful CPT parameterization found in {max_tries} tries")


def sample(scm: Scm, m: int, seed: int, return_exogenous: bool = False):
    """Draw m rows by ancestral sampling.

    With return_exogenous=True also returns the (m, n) matrix of latent
    exogenous draws: standard normals for linear-Gaussian models, the
    inverse-CDF uniforms for discrete ones.
    """
    if m < 1:
        raise SimulationError(f"need at least one row, got m={m}")
    n = scm.dag.n
    rng = np.random.default_rng(seed)
    order = topological_order(scm.dag)
    names = [f"x{i}" for i in range(n)]
    if scm.mechanism == LINEAR_GAUSSIAN:
        exo = rng.standard_normal((m, n))
        weights = scm.params["weights"]
        noise = scm.params["noise_scale"]
        vals = np.zeros((m, n))
        for i in order:
            acc = noise[i] * exo[:, i]
            for p in sorted(scm.dag.parents(i)):
                acc = acc + weights[(p, i)] * vals[:, p]
            vals[:, i] = acc
        d = Dataset(names, ["continuous"] * n, vals)
    else:
        exo = rng.uniform(size=(m, n))
        arities = scm.params["arities"]
        vals = np.zeros((m, n))
        for i in order:
            parents = sorted(scm.dag.parents(i))
            cpt = scm.params["cpts"][i]
            rows = cpt.reshape(-1, arities[i])
            if parents:
                flat = np.zeros(m, dtype=np.int64)
                for p in parents:
                    flat = flat * arities[p] + vals[:, p].astype(np.int64)
            else:
                flat = np.zeros(m, dtype=np.int64)
            cdf = np.cumsum(rows, axis=1)
            u = exo[:, i]
            codes = (u[:, None] >= cdf[flat]).sum(axis=1)
            vals[:, i] = np.minimum(codes, arities[i] - 1)
        d = Dataset(names, ["discrete"] * n, vals)
    if return_exogenous:
        return d, exo
    return d


def exam_fixture(m: int, seed: int):
    """Three-variable nonlinear example: difficulty, study time, score.

    difficulty = 3 e_d + 1, study = e_t ** 2,
    score = 10 study - 2 difficulty + 3 e_s + 5, with iid standard normal
    exogenous draws; expected means are 1, 1 and 13.
    """
    rng = np.random.default_rng(seed)
    exo = rng.standard_normal((m, 3))
    difficulty = 3.0 * exo[:, 0] + 1.0
    study = exo[:, 1] ** 2
    score = 10.0 * study - 2.0 * difficulty + 3.0 * exo[:, 2] + 5.0
    d = Dataset(["difficulty", "study", "score"], ["continuous"] * 3,
                np.column_stack([difficulty, study, score]))
    return d, exo


def augmented_graph(dag: Graph) -> Graph:
    """dag plus one exogenous source per node: node n + i points at i."""
    n = dag.n
    extra = [(n + i, i) for i in range(n)]
    return Graph(2 * n, directed=set(dag.directed) | set(extra), kind="dag")


class DSeparationOracle:
    """CI oracle: 0.0 when d-separated in the augmented graph, else 1.0.

    Indices 0..n-1 address the endogenous variables, n..2n-1 their
    exogenous parents, so the oracle can stand in for the kNN estimator
    at every pipeline stage, including the ones that query exogenous
    columns.
    """

    def __init__(self, dag: Graph):
        if dag.undirected:
            raise GraphError("oracle_ci requires a fully directed DAG")
        self.n_endogenous = dag.n
        self.graph = augmented_graph(dag)
        self.n_vars = self.graph.n
        self.calls = 0
        self._cache: dict = {}

    def __call__(self, x_cols, y_cols, z_cols=()) -> float:
        self.calls += 1
        x = tuple(sorted(x_cols))
        y = tuple(sorted(y_cols))
        if y < x:
            x, y = y, x
        key = (x, y, tuple(sorted(z_cols)))
        hit = self._cache.get(key)
        if hit is None:
            hit = 0.0 if d_separated(self.graph, x, y, key[2]) else 1.0
            self._cache[key] = hit
        return hit


def oracle_ci(scm) -> DSeparationOracle:
    """Oracle built from an Scm (or directly from a DAG)."""
    dag = scm.dag if isinstance(scm, Scm) else scm
    return DSeparationOracle(dag)
