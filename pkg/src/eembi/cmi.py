"""Conditional mutual information estimation on mixed data.

The kNN estimator works directly on tables mixing discrete codes and
continuous values.  For each row the distance to its k-th nearest other
row in the joint (X, Y, Z) space under the l-infinity metric sets a
radius rho_i; with

    ktilde_i  = #{j != i : d_joint(i, j) <= rho_i}
    N_XZ,i    = #{1 <= j <= N : d_XZ(i, j) <= rho_i}     (and N_YZ, N_Z alike)

the per-row contribution is

    xi_i = psi(ktilde_i) - psi(N_XZ,i) - psi(N_YZ,i) + psi(N_Z,i)

and the estimate is the average of the xi_i.  On continuous data
ktilde_i = k almost surely; ties (from discrete coordinates or repeated
rows) inflate the counts, which is what adapts the estimator to mixed
variables.  Estimates may be negative and are returned as-is.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

DEFAULT_K = 5
_TREE_MIN_ROWS = 512   # below this, brute force beats tree construction
_CHUNK_ELEMS = 2 ** 22  # distance-matrix elements held per brute chunk
_TREE_CACHE_MAX = 128


class EstimationError(ValueError):
    """Raised for unusable estimator queries."""


def _as_matrix(data) -> np.ndarray:
    vals = data.values if hasattr(data, "values") else np.asarray(data)
    vals = np.asarray(vals, dtype=np.float64)
    if vals.ndim != 2:
        raise EstimationError(f"data must be 2-d, got shape {vals.shape}")
    return vals


def _check_query(n_cols, n_rows, x, y, z, k):
    groups = {"x_cols": tuple(x), "y_cols": tuple(y), "z_cols": tuple(z)}
    if not groups["x_cols"] or not groups["y_cols"]:
        raise EstimationError("x_cols and y_cols must be non-empty")
    seen = set()
    for label, cols in groups.items():
        for c in cols:
            if not (0 <= c < n_cols):
                raise EstimationError(
                    f"{label} index {c} out of range for {n_cols} columns")
            if c in seen:
                raise EstimationError(
                    f"column {c} appears in more than one of x/y/z")
            seen.add(c)
    if k < 1:
        raise EstimationError(f"k must be positive, got {k}")
    if k >= n_rows:
        raise EstimationError(f"k={k} requires more than {k} rows, got {n_rows}")
    return groups["x_cols"], groups["y_cols"], groups["z_cols"]


def _counts_brute(vals, x, y, z, k):
    n = vals.shape[0]
    chunk = max(1, _CHUNK_ELEMS // n)
    ktilde = np.empty(n, dtype=np.int64)
    nxz = np.empty(n, dtype=np.int64)
    nyz = np.empty(n, dtype=np.int64)
    nz = np.empty(n, dtype=np.int64)

    def dist(rows, cols, base=None):
        d = np.zeros((len(rows), n)) if base is None else base.copy()
        for c in cols:
            np.maximum(d, np.abs(vals[rows, c][:, None] - vals[:, c]), out=d)
        return d

    for start in range(0, n, chunk):
        rows = np.arange(start, min(start + chunk, n))
        dz = dist(rows, z)
        dxz = dist(rows, x, base=dz)
        dyz = dist(rows, y, base=dz)
        dj = dist(rows, y, base=dxz)
        rho = np.partition(dj, k, axis=1)[:, k]
        ktilde[rows] = (dj <= rho[:, None]).sum(axis=1) - 1
        nxz[rows] = (dxz <= rho[:, None]).sum(axis=1)
        nyz[rows] = (dyz <= rho[:, None]).sum(axis=1)
        nz[rows] = n if not z else (dz <= rho[:, None]).sum(axis=1)
    return ktilde, nxz, nyz, nz


def _cached_tree(vals, cols, cache):
    key = tuple(sorted(cols))
    if cache is not None and key in cache:
        cache.move_to_end(key)
        return cache[key]
    tree = cKDTree(np.ascontiguousarray(vals[:, key]))
    if cache is not None:
        cache[key] = tree
        if len(cache) > _TREE_CACHE_MAX:
            cache.popitem(last=False)
    return tree


def _counts_tree(vals, x, y, z, k, cache):
    n = vals.shape[0]
    joint = _cached_tree(vals, x + y + z, cache)
    dists, _ = joint.query(vals[:, tuple(sorted(x + y + z))], k=k + 1,
                           p=np.inf)
    rho = np.ascontiguousarray(dists[:, k])

    def count(cols):
        tree = _cached_tree(vals, cols, cache)
        pts = vals[:, tuple(sorted(cols))]
        return tree.query_ball_point(pts, rho, p=np.inf,
                                     return_length=True).astype(np.int64)

    ktilde = count(x + y + z) - 1
    nxz = count(x + z)
    nyz = count(y + z)
    nz = count(z) if z else np.full(n, n, dtype=np.int64)
    return ktilde, nxz, nyz, nz


def knn_cmi(data, x_cols: Sequence[int], y_cols: Sequence[int],
            z_cols: Sequence[int] = (), k: int = DEFAULT_K,
            method: str = "auto", _tree_cache=None) -> float:
    """Estimate I(X; Y | Z) in nats from a Dataset or an (N, m) array.

    `method` selects the neighbor search: "brute" (chunked dense
    distances), "tree" (k-d tree) or "auto".  Both searches produce
    identical counts, so the result does not depend on the choice.
    """
    vals = _as_matrix(data)
    x, y, z = _check_query(vals.shape[1], vals.shape[0], x_cols, y_cols,
                           z_cols, k)
    if method not in ("auto", "brute", "tree"):
        raise EstimationError(f"unknown method {method!r}")
    if method == "auto":
        method = "tree" if vals.shape[0] >= _TREE_MIN_ROWS else "brute"
    if method == "brute":
        ktilde, nxz, nyz, nz = _counts_brute(vals, x, y, z, k)
    else:
        ktilde, nxz, nyz, nz = _counts_tree(vals, x, y, z, k, _tree_cache)
    # grouping keeps the evaluation exactly symmetric under an x/y swap
    xi = (digamma(ktilde) + digamma(nz)) - (digamma(nxz) + digamma(nyz))
    return float(np.mean(xi))


def mutual_information(data, x_cols: Sequence[int], y_cols: Sequence[int],
                       k: int = DEFAULT_K, method: str = "auto") -> float:
    """I(X; Y), the unconditional special case of knn_cmi."""
    return knn_cmi(data, x_cols, y_cols, (), k=k, method=method)


class KnnCmiEstimator:
    """knn_cmi bound to one data matrix, with a tree cache and call counter.

    Instances are callable as (x_cols, y_cols, z_cols) -> float, the
    interface every pipeline stage expects, so an exact oracle can stand
    in for this class in tests.
    """

    def __init__(self, data, k: int = DEFAULT_K, method: str = "auto"):
        self.values = _as_matrix(data)
        self.k = k
        self.method = method
        self.n_vars = self.values.shape[1]
        self.calls = 0
        self._tree_cache: OrderedDict = OrderedDict()

    def __call__(self, x_cols, y_cols, z_cols=()) -> float:
        self.calls += 1
        return knn_cmi(self.values, x_cols, y_cols, z_cols, k=self.k,
                       method=self.method, _tree_cache=self._tree_cache)


class JointTable:
    """Explicit joint distribution over discrete variables.

    `probs[i0, ..., im]` is P(X0 = i0, ..., Xm = im); entries must be
    non-negative and sum to one within 1e-12.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim < 1:
            raise EstimationError("joint table needs at least one axis")
        if np.any(arr < 0):
            raise EstimationError("joint table has negative mass")
        total = float(arr.sum())
        if abs(total - 1.0) > 1e-12:
            raise EstimationError(
                f"joint table mass is {total!r}, expected 1 within 1e-12")
        arr = arr.copy()
        arr.setflags(write=False)
        self.probs = arr

    @property
    def arities(self) -> tuple[int, ...]:
        return self.probs.shape


def exact_cmi_discrete(table: JointTable, x_axes: Sequence[int],
                       y_axes: Sequence[int],
                       z_axes: Sequence[int] = ()) -> float:
    """Exact I(X; Y | Z) in nats from a joint table, with 0*ln(0) = 0."""
    ndim = table.probs.ndim
    x, y, z = _check_query(ndim, np.inf, x_axes, y_axes, z_axes, 1)
    keep = x + y + z
    drop = tuple(a for a in range(ndim) if a not in keep)
    p = table.probs.sum(axis=drop) if drop else table.probs
    # reorder remaining axes to (X..., Y..., Z...) and flatten each block
    remaining = tuple(a for a in range(ndim) if a not in drop)
    order = [remaining.index(a) for a in keep]
    p = np.transpose(p, order)
    nx = int(np.prod([table.probs.shape[a] for a in x]))
    ny = int(np.prod([table.probs.shape[a] for a in y]))
    nz = int(np.prod([table.probs.shape[a] for a in z])) if z else 1
    pxyz = p.reshape(nx, ny, nz)
    pxz = pxyz.sum(axis=1)
    pyz = pxyz.sum(axis=0)
    pz = pxyz.sum(axis=(0, 1))
    mask = pxyz > 0.0  # wherever pxyz > 0 every involved marginal is too
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = (np.log(pxyz) + np.log(pz)[None, None, :]
                     - np.log(pxz)[:, None, :] - np.log(pyz)[None, :, :])
    return float(np.sum(pxyz[mask] * log_ratio[mask]))
