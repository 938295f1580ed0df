"""Mixed graphs and the structural operations behind the pipelines.

A Graph holds directed and undirected edges over nodes 0..n-1.  DAGs and
CPDAGs are both represented this way; `kind` is an optional producer-set
flag ("dag" or "cpdag") and does not take part in equality.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Iterable, NamedTuple


class GraphError(ValueError):
    """Raised for structurally invalid graphs or misused operations."""


class VStructure(NamedTuple):
    """A collider i -> j <- k with i < k and i, k non-adjacent."""

    i: int
    j: int
    k: int


class Graph:
    """Immutable mixed graph.

    Parameters
    ----------
    n : number of nodes, labelled 0..n-1.
    directed : iterable of (i, j) pairs meaning i -> j.
    undirected : iterable of unordered pairs; stored canonically as
        (min, max).  A pair of nodes may carry at most one relationship.
    kind : optional flag, "dag" or "cpdag".  "dag" is validated
        (directed-only and acyclic); "cpdag" is trusted to the producer.
    """

    __slots__ = ("n", "directed", "undirected", "kind", "_parents",
                 "_children", "_neighbors")

    def __init__(self, n: int,
                 directed: Iterable[tuple[int, int]] = (),
                 undirected: Iterable[tuple[int, int]] = (),
                 kind: str | None = None):
        if n < 0:
            raise GraphError(f"node count must be non-negative, got {n}")
        dir_edges = set()
        for i, j in directed:
            self._check_pair(n, i, j)
            if (i, j) in dir_edges:
                raise GraphError(f"duplicate directed edge {i}->{j}")
            dir_edges.add((i, j))
        und_edges = set()
        for a, b in undirected:
            self._check_pair(n, a, b)
            pair = (a, b) if a < b else (b, a)
            if pair in und_edges:
                raise GraphError(f"duplicate undirected edge {a}-{b}")
            und_edges.add(pair)
        for i, j in dir_edges:
            if (j, i) in dir_edges:
                raise GraphError(f"both {i}->{j} and {j}->{i} present")
            pair = (i, j) if i < j else (j, i)
            if pair in und_edges:
                raise GraphError(
                    f"pair ({i},{j}) has both a directed and an undirected edge")
        if kind not in (None, "dag", "cpdag"):
            raise GraphError(f"unknown graph kind {kind!r}")
        self.n = n
        self.directed = frozenset(dir_edges)
        self.undirected = frozenset(und_edges)
        self.kind = kind

        parents = {v: set() for v in range(n)}
        children = {v: set() for v in range(n)}
        neighbors = {v: set() for v in range(n)}
        for i, j in dir_edges:
            children[i].add(j)
            parents[j].add(i)
        for a, b in und_edges:
            neighbors[a].add(b)
            neighbors[b].add(a)
        self._parents = parents
        self._children = children
        self._neighbors = neighbors

        if kind == "dag":
            if self.undirected:
                raise GraphError("a DAG may not contain undirected edges")
            if not is_acyclic(self):
                raise GraphError("graph flagged as DAG contains a directed cycle")

    @staticmethod
    def _check_pair(n, i, j):
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i},{j}) out of range for n={n}")
        if i == j:
            raise GraphError(f"self-edge on node {i}")

    # --- queries ------------------------------------------------------

    def parents(self, v: int) -> frozenset[int]:
        return frozenset(self._parents[v])

    def children(self, v: int) -> frozenset[int]:
        return frozenset(self._children[v])

    def neighbors(self, v: int) -> frozenset[int]:
        """Nodes joined to v by an undirected edge."""
        return frozenset(self._neighbors[v])

    def adjacent_to(self, v: int) -> frozenset[int]:
        """All nodes sharing any edge with v."""
        return frozenset(self._parents[v] | self._children[v]
                         | self._neighbors[v])

    def has_directed(self, i: int, j: int) -> bool:
        return (i, j) in self.directed

    def has_undirected(self, a: int, b: int) -> bool:
        pair = (a, b) if a < b else (b, a)
        return pair in self.undirected

    def adjacent(self, a: int, b: int) -> bool:
        return ((a, b) in self.directed or (b, a) in self.directed
                or self.has_undirected(a, b))

    def edge_count(self) -> int:
        return len(self.directed) + len(self.undirected)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and self.directed == other.directed
                and self.undirected == other.undirected)

    def __hash__(self):
        return hash((self.n, self.directed, self.undirected))

    def __repr__(self):
        d = sorted(self.directed)
        u = sorted(self.undirected)
        return f"Graph(n={self.n}, directed={d}, undirected={u})"


def is_acyclic(g: Graph) -> bool:
    """True iff the directed part of g contains no directed cycle."""
    indeg = {v: len(g._parents[v]) for v in range(g.n)}
    queue = deque(v for v in range(g.n) if indeg[v] == 0)
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        for c in g._children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return seen == g.n


def topological_order(g: Graph) -> list[int]:
    """A topological order of the directed part (lowest index first on ties)."""
    indeg = {v: len(g._parents[v]) for v in range(g.n)}
    ready = sorted(v for v in range(g.n) if indeg[v] == 0)
    order = []
    import heapq
    heapq.heapify(ready)
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in sorted(g._children[v]):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != g.n:
        raise GraphError("graph contains a directed cycle")
    return order


def skeleton(g: Graph) -> Graph:
    """Undirected copy: every adjacency becomes an undirected edge."""
    pairs = set(g.undirected)
    for i, j in g.directed:
        pairs.add((i, j) if i < j else (j, i))
    return Graph(g.n, undirected=pairs)


def find_v_structures(g: Graph) -> list[VStructure]:
    """All colliders i -> j <- k with i, k non-adjacent, sorted by (j, i, k).

    Expects a fully directed graph; use the internal helper for PDAGs.
    """
    if g.undirected:
        raise GraphError("find_v_structures expects a fully directed graph")
    return _v_structures_directed(g)


def _v_structures_directed(g: Graph) -> list[VStructure]:
    out = []
    for j in range(g.n):
        pa = sorted(g._parents[j])
        for i, k in itertools.combinations(pa, 2):
            if not g.adjacent(i, k):
                out.append(VStructure(i, j, k))
    out.sort(key=lambda v: (v.j, v.i, v.k))
    return out


def meek_closure(g: Graph) -> Graph:
    """Orientation closure under the three Meek rules.

    Rules, applied to an undirected pair a - b (orienting a -> b):
      1. some w -> a exists with w, b non-adjacent;
      2. a directed path a -> w -> b exists;
      3. two non-adjacent w1, w2 with a - w1, a - w2 undirected and
         w1 -> b, w2 -> b.

    Deterministic: rules are scanned in order, candidate pairs in canonical
    (min, max) order trying a->b before b->a, and the scan restarts after
    every orientation.  Directed input edges are never removed or reversed.
    """
    directed = set(g.directed)
    undirected = set(g.undirected)

    def adjacent(a, b):
        return ((a, b) in directed or (b, a) in directed
                or (min(a, b), max(a, b)) in undirected)

    def rule_fires(rule, a, b):
        if rule == 1:
            return any((w, a) in directed and not adjacent(w, b)
                       for w in range(g.n) if w != b)
        if rule == 2:
            return any((a, w) in directed and (w, b) in directed
                       for w in range(g.n))
        nbrs = [w for w in range(g.n)
                if (min(a, w), max(a, w)) in undirected and w != b]
        for w1, w2 in itertools.combinations(sorted(nbrs), 2):
            if ((w1, b) in directed and (w2, b) in directed
                    and not adjacent(w1, w2)):
                return True
        return False

    changed = True
    while changed:
        changed = False
        for rule in (1, 2, 3):
            for u, v in sorted(undirected):
                for a, b in ((u, v), (v, u)):
                    if rule_fires(rule, a, b):
                        undirected.discard((u, v))
                        directed.add((a, b))
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    return Graph(g.n, directed=directed, undirected=undirected)


def dag_to_cpdag(g: Graph) -> Graph:
    """CPDAG of the Markov equivalence class containing the DAG g.

    Keeps the skeleton, re-orients exactly the V-structure edges, then
    closes under the Meek rules.
    """
    if g.undirected:
        raise GraphError("dag_to_cpdag expects a fully directed graph")
    if not is_acyclic(g):
        raise GraphError("dag_to_cpdag rejects cyclic input")
    forced = set()
    for i, j, k in find_v_structures(g):
        forced.add((i, j))
        forced.add((k, j))
    rest = set()
    for i, j in g.directed:
        if (i, j) not in forced:
            rest.add((i, j) if i < j else (j, i))
    closed = meek_closure(Graph(g.n, directed=forced, undirected=rest))
    return Graph(g.n, directed=closed.directed,
                 undirected=closed.undirected, kind="cpdag")


def is_cpdag(g: Graph) -> bool:
    """Whether g is the Meek fixed point of its own V-structure pattern."""
    if not is_acyclic(g):
        return False
    forced = set()
    for i, j, k in _v_structures_directed(g):
        forced.add((i, j))
        forced.add((k, j))
    if not forced.issubset(g.directed):
        return False
    rest = set()
    for i, j in g.directed:
        if (i, j) not in forced:
            rest.add((i, j) if i < j else (j, i))
    pattern = Graph(g.n, directed=forced,
                    undirected=rest | set(g.undirected))
    closed = meek_closure(pattern)
    return closed.directed == g.directed and closed.undirected == g.undirected


def _ancestors_of(g: Graph, nodes: set[int]) -> set[int]:
    """nodes together with every ancestor of a member."""
    out = set(nodes)
    stack = list(nodes)
    while stack:
        v = stack.pop()
        for p in g._parents[v]:
            if p not in out:
                out.add(p)
                stack.append(p)
    return out


def d_separated(g: Graph, a: Iterable[int], b: Iterable[int],
                c: Iterable[int] = ()) -> bool:
    """True iff every trail between A and B is blocked given C.

    A trail is active when all its colliders have themselves or a
    descendant inside C and no other trail node lies in C.  Implemented by
    reachability over (node, entry-direction) states, linear in the edge
    count.  A, B and C must be pairwise disjoint; g must be a DAG.
    """
    if g.undirected:
        raise GraphError("d_separated expects a fully directed graph")
    if not is_acyclic(g):
        raise GraphError("d_separated expects an acyclic graph")
    a, b, c = set(a), set(b), set(c)
    for s in (a | b | c):
        if not (0 <= s < g.n):
            raise GraphError(f"node {s} out of range for n={g.n}")
    if a & b or a & c or b & c:
        raise GraphError("A, B and C must be pairwise disjoint")
    if not a or not b:
        return True

    anc_c = _ancestors_of(g, c)
    # states: (node, 1) reached moving up (towards parents),
    #         (node, 0) reached moving down (towards children)
    visited = set()
    queue = deque((s, 1) for s in sorted(a))
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v in b:
            return False
        if up:
            if v not in c:
                for p in g._parents[v]:
                    queue.append((p, 1))
                for ch in g._children[v]:
                    queue.append((ch, 0))
        else:
            if v not in c:
                for ch in g._children[v]:
                    queue.append((ch, 0))
            if v in anc_c:
                for p in g._parents[v]:
                    queue.append((p, 1))
    return True


def find_directed_cycle(g: Graph) -> list[tuple[int, int]] | None:
    """Edges of some directed cycle, or None; deterministic search order."""
    color = {v: 0 for v in range(g.n)}  # 0 unseen, 1 on stack, 2 done
    parent_edge: dict[int, int] = {}

    def visit(v):
        color[v] = 1
        for c in sorted(g._children[v]):
            if color[c] == 1:
                cycle = [(v, c)]
                cur = v
                while cur != c:
                    p = parent_edge[cur]
                    cycle.append((p, cur))
                    cur = p
                cycle.reverse()
                return cycle
            if color[c] == 0:
                parent_edge[c] = v
                found = visit(c)
                if found:
                    return found
        color[v] = 2
        return None

    for start in range(g.n):
        if color[start] == 0:
            found = visit(start)
            if found:
                return found
    return None


def markov_blanket(g: Graph, v: int) -> frozenset[int]:
    """Parents, children and co-parents of v in a DAG."""
    if g.undirected:
        raise GraphError("markov_blanket expects a fully directed graph")
    out = set(g._parents[v]) | set(g._children[v])
    for c in g._children[v]:
        out |= g._parents[c]
    out.discard(v)
    return frozenset(out)


def to_dot(g: Graph, names: Iterable[str] | None = None) -> str:
    """DOT text; directed edges as arrows, undirected drawn without heads."""
    label = list(names) if names is not None else [f"x{v}" for v in range(g.n)]
    if len(label) != g.n:
        raise GraphError("names must match the node count")
    lines = ["digraph {"]
    for v in range(g.n):
        lines.append(f'  n{v} [label="{label[v]}"];')
    for i, j in sorted(g.directed):
        lines.append(f"  n{i} -> n{j};")
    for a, b in sorted(g.undirected):
        lines.append(f"  n{a} -> n{b} [dir=none];")
    lines.append("}")
    return "\n".join(lines) + "\n"
