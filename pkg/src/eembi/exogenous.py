"""Recovering exogenous variables: whitening, deflation ICA and matching.

The unmixing step estimates one candidate exogenous column per observed
variable; the matching step then pairs candidates with variables by
solving an assignment problem on pairwise mutual information, under the
constraint that a pair with (estimated) zero MI may not be matched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cmi import DEFAULT_K, KnnCmiEstimator

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 200
DEFAULT_ZERO_EPS = 0.01     # estimated MI at or below this counts as zero
_EIG_FLOOR_FACTOR = 1e-10
_SENTINEL = 1e15


class IcaError(RuntimeError):
    """Raised when an ICA component update degenerates."""


class AssignmentInfeasibleError(RuntimeError):
    """Raised when no sentinel-free complete assignment exists."""

    def __init__(self, blocked_rows):
        self.blocked_rows = tuple(blocked_rows)
        super().__init__(
            "no feasible assignment: rows "
            f"{list(self.blocked_rows)} were matched through zero-MI cells")


def _values(data) -> np.ndarray:
    vals = data.values if hasattr(data, "values") else np.asarray(data)
    return np.asarray(vals, dtype=np.float64)


@dataclass(frozen=True)
class WhitenResult:
    """Centered, decorrelated data with the map that produced it."""

    values: np.ndarray      # (N, n), sample covariance = identity
    mean: np.ndarray        # (n,) column means removed
    transform: np.ndarray   # (n, n), applied on the right of centered data


def whiten(data) -> WhitenResult:
    """Zero the means and map the covariance to the identity.

    The transform is U diag(s)^(-1/2) U^T from the SVD of the sample
    covariance (1/N normalization).  Eigenvalues below
    1e-10 * trace / n are floored there, with a warning, so constant or
    collinear columns stay usable.
    """
    x = _values(data)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"whiten needs an (N, n) matrix with N >= 2, "
                         f"got shape {x.shape}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    u, s, _ = np.linalg.svd(cov, hermitian=True)
    floor = _EIG_FLOOR_FACTOR * np.trace(cov) / cov.shape[0]
    if np.any(s < floor):
        warnings.warn(
            f"covariance is rank-deficient; {int(np.sum(s < floor))} "
            "eigenvalue(s) floored during whitening", RuntimeWarning)
        s = np.maximum(s, floor)
    transform = u @ np.diag(1.0 / np.sqrt(s)) @ u.T
    return WhitenResult(centered @ transform, mean, transform)


@dataclass(frozen=True)
class IcaResult:
    """Unmixing estimate; rows of W are unit-norm orthogonal components."""

    W: np.ndarray
    whitening: WhitenResult
    iterations: tuple[int, ...]
    converged: tuple[bool, ...]


def fast_ica(data, seed: int, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER,
             n_components: int | None = None) -> IcaResult:
    """Deflation FastICA with the log cosh contrast (g = tanh).

    Each component starts from a seeded draw on the unit sphere and
    iterates the Newton update

        beta = E[(w.x) g(w.x)]
        w+   = w - (E[x g(w.x)] - beta w) / (E[g'(w.x)] - beta)

    followed by normalization, Gram-Schmidt deflation against earlier
    components and renormalization.  A component stops when
    |<w+, w>| > 1 - tol or after max_iter updates (converged flag False).
    A non-finite update raises IcaError naming the component.
    """
    white = whiten(data)
    xw = white.values
    n_obs, n = xw.shape
    c = n if n_components is None else int(n_components)
    if not (1 <= c <= n):
        raise ValueError(f"n_components must be in [1, {n}], got {c}")
    rng = np.random.default_rng(seed)
    W = np.zeros((c, n))
    iterations = []
    converged = []
    for comp in range(c):
        w = rng.standard_normal(n)
        w /= np.linalg.norm(w)
        done = False
        used = max_iter
        for it in range(1, max_iter + 1):
            u = xw @ w
            g = np.tanh(u)
            beta = float(u @ g) / n_obs
            denom = float(np.mean(1.0 - g * g)) - beta
            if denom == 0.0 or not np.isfinite(denom):
                raise IcaError(f"degenerate Newton denominator on "
                               f"component {comp}")
            w_new = w - ((xw.T @ g) / n_obs - beta * w) / denom
            norm = np.linalg.norm(w_new)
            if not np.isfinite(norm) or norm == 0.0:
                raise IcaError(f"non-finite update on component {comp}")
            w_new /= norm
            if comp:
                w_new = w_new - W[:comp].T @ (W[:comp] @ w_new)
                norm = np.linalg.norm(w_new)
                if not np.isfinite(norm) or norm < 1e-12:
                    raise IcaError(
                        f"component {comp} collapsed into the span of "
                        "earlier components")
                w_new /= norm
            overlap = abs(float(w_new @ w))
            w = w_new
            if overlap > 1.0 - tol:
                done = True
                used = it
                break
        W[comp] = w
        iterations.append(used)
        converged.append(done)
    return IcaResult(W, white, tuple(iterations), tuple(converged))


@dataclass(frozen=True)
class ExogenousData:
    """Candidate exogenous columns; column i pairs with variable i once
    matched is True."""

    values: np.ndarray
    matched: bool
    permutation: tuple[int, ...] | None
    ica: IcaResult | None = None
    binarized: bool = False


def generate_exogenous(d, seed: int, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER) -> ExogenousData:
    """Unmixed candidate exogenous data, one column per variable.

    E is the whitened data projected on the ICA components.  When every
    column of d is discrete, E is thresholded to binary at zero (the
    sigmoid-at-1/2 rule).
    """
    ica = fast_ica(d.values, seed, tol=tol, max_iter=max_iter)
    e = ica.whitening.values @ ica.W.T
    binarized = bool(getattr(d, "all_discrete", False))
    if binarized:
        e = (e > 0.0).astype(np.float64)
    return ExogenousData(e, matched=False, permutation=None, ica=ica,
                         binarized=binarized)


@dataclass(frozen=True)
class CostMatrix:
    """Assignment costs: entry (i, j) is -I(x_i; e_j), with a mask of
    infeasible cells whose MI did not exceed zero_eps."""

    mi: np.ndarray
    infeasible: np.ndarray
    zero_eps: float

    @property
    def costs(self) -> np.ndarray:
        return -self.mi


def build_cost_matrix(d, e, k: int = DEFAULT_K,
                      zero_eps: float = DEFAULT_ZERO_EPS) -> CostMatrix:
    """Pairwise MI between observed columns and candidate exogenous
    columns, as an assignment cost matrix."""
    x = _values(d)
    ev = _values(e)
    if x.shape[0] != ev.shape[0]:
        raise ValueError("data and exogenous row counts differ")
    n, m = x.shape[1], ev.shape[1]
    est = KnnCmiEstimator(np.hstack([x, ev]), k=k)
    mi = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            mi[i, j] = est((i,), (n + j,))
    return CostMatrix(mi, mi <= zero_eps, zero_eps)


def solve_assignment(c: CostMatrix) -> tuple[int, ...]:
    """Exact minimum-cost complete assignment honoring the feasibility
    mask; infeasible cells carry a finite huge cost internally and any
    solution using one is rejected with the blocked rows named."""
    work = np.where(c.infeasible, _SENTINEL, c.costs)
    rows, cols = linear_sum_assignment(work)
    perm = [0] * len(rows)
    for r, col in zip(rows, cols):
        perm[r] = int(col)
    blocked = [int(r) for r in rows if c.infeasible[r, perm[r]]]
    if blocked:
        raise AssignmentInfeasibleError(blocked)
    return tuple(perm)


def match_exogenous(d, e: ExogenousData, k: int = DEFAULT_K,
                    zero_eps: float = DEFAULT_ZERO_EPS) -> ExogenousData:
    """Reorder candidate columns so column i belongs to variable i."""
    c = build_cost_matrix(d, e.values, k=k, zero_eps=zero_eps)
    perm = solve_assignment(c)
    reordered = e.values[:, perm]
    return ExogenousData(reordered, matched=True, permutation=perm,
                         ica=e.ica, binarized=e.binarized)
