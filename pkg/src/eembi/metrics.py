"""Structure recovery metrics and the adjacency-matrix interchange format.

Graphs are encoded as binary matrices: a directed edge i -> j sets
A[i, j] = 1 and A[j, i] = 0, an undirected edge sets both.  SHD is the
literal entrywise L1 distance under this encoding, so a reversed edge
costs 2 and a direction-versus-undirected mismatch costs 1.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .graph import Graph


class MetricError(ValueError):
    """Raised for malformed adjacency inputs or degenerate metrics."""


def to_adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n), dtype=np.int64)
    for i, j in g.directed:
        a[i, j] = 1
    for i, j in g.undirected:
        a[i, j] = 1
        a[j, i] = 1
    return a


def _as_adjacency(x, name="matrix") -> np.ndarray:
    if isinstance(x, Graph):
        return to_adjacency(x)
    a = np.asarray(x)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MetricError(f"{name} must be square, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise MetricError(f"{name} must be binary")
    if np.any(np.diag(a) != 0):
        raise MetricError(f"{name} has nonzero diagonal entries")
    return a.astype(np.int64)


def from_adjacency(a) -> Graph:
    """Inverse of to_adjacency."""
    a = _as_adjacency(a, "adjacency")
    n = a.shape[0]
    directed = []
    undirected = []
    for i in range(n):
        for j in range(i + 1, n):
            if a[i, j] and a[j, i]:
                undirected.append((i, j))
            elif a[i, j]:
                directed.append((i, j))
            elif a[j, i]:
                directed.append((j, i))
    return Graph(n, directed=directed, undirected=undirected)


def shd(pred, truth) -> int:
    """Structural Hamming distance: sum of |A_ij - B_ij|."""
    a = _as_adjacency(pred, "pred")
    b = _as_adjacency(truth, "truth")
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch: {a.shape} vs {b.shape}")
    return int(np.abs(a - b).sum())


def aupr(pred, truth) -> float:
    """Area under precision-recall over ordered node pairs.

    Scores (binary adjacency entries, or any real scores) are swept over
    their distinct values descending, with equal scores grouped into one
    threshold step; the result is sum_t (R_t - R_{t-1}) P_t.  An edgeless
    prediction therefore scores the truth's prevalence.  An all-zero
    truth is rejected.
    """
    if isinstance(pred, Graph):
        scores = to_adjacency(pred).astype(np.float64)
    else:
        scores = np.asarray(pred, dtype=np.float64)
        if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
            raise MetricError(f"pred must be square, got {scores.shape}")
    b = _as_adjacency(truth, "truth")
    if scores.shape != b.shape:
        raise MetricError(f"shape mismatch: {scores.shape} vs {b.shape}")
    off = ~np.eye(b.shape[0], dtype=bool)
    s = scores[off]
    y = b[off]
    pos = int(y.sum())
    if pos == 0:
        raise MetricError("truth graph has no edges; AUPR is undefined")
    area = 0.0
    tp = 0
    seen = 0
    r_prev = 0.0
    for v in np.unique(s)[::-1]:
        sel = s == v
        tp += int(y[sel].sum())
        seen += int(sel.sum())
        precision = tp / seen
        recall = tp / pos
        area += (recall - r_prev) * precision
        r_prev = recall
    return float(area)


def write_adjacency(path, g_or_matrix) -> None:
    """Adjacency CSV: one row per node, 0/1 integers, no header."""
    a = _as_adjacency(g_or_matrix, "adjacency")
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def read_adjacency(path) -> np.ndarray:
    """Read an adjacency CSV, tolerating one optional header row."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise MetricError(f"{path}: {exc.strerror or exc}") from exc
    if not rows:
        raise MetricError(f"{path}: empty adjacency file")

    def parse(row):
        try:
            return [int(float(c)) for c in row]
        except ValueError:
            return None

    parsed = [parse(r) for r in rows]
    if parsed[0] is None:
        parsed = parsed[1:]
    if not parsed or any(p is None for p in parsed):
        raise MetricError(f"{path}: non-numeric adjacency entries")
    a = np.array(parsed)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MetricError(f"{path}: adjacency must be square, got "
                          f"{a.shape}")
    return _as_adjacency(a, "adjacency")


REPORT_FIELDS = ("dataset", "method", "seed", "shd", "aupr", "runtime")


def write_report_csv(rows, path, fields=None) -> None:
    """Metric report rows as CSV; field order is fixed for determinism."""
    if fields is None:
        fields = list(rows[0].keys()) if rows else list(REPORT_FIELDS)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def report_json(rows) -> str:
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"
