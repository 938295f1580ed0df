"""Markov blanket discovery by greedy CMI ranking (improved IAMB).

Each phase takes the CMI estimator as a callable (x_cols, y_cols,
z_cols) -> float, so the kNN estimator can be swapped for an exact
d-separation oracle in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .cmi import DEFAULT_K, KnnCmiEstimator

DEFAULT_ALPHA = 0.01

CmiFn = Callable[..., float]


@dataclass(frozen=True)
class MarkovBlankets:
    """Per-node blanket membership, symmetric after the final check."""

    members: tuple[frozenset[int], ...]

    def __getitem__(self, i: int) -> frozenset[int]:
        return self.members[i]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def is_symmetric(self) -> bool:
        return all(i in self.members[j]
                   for i, b in enumerate(self.members) for j in b)


def _resolve(d, k: int, cmi: CmiFn | None) -> tuple[CmiFn, int]:
    """The estimator to use and the number of endogenous variables."""
    if cmi is not None:
        n = getattr(cmi, "n_endogenous", None)
        if n is None:
            n = getattr(cmi, "n_vars", None)
        if n is None:
            if d is None:
                raise ValueError(
                    "estimator exposes no variable count and no dataset "
                    "was given")
            n = d.n_cols
        return cmi, int(n)
    if d is None:
        raise ValueError("either a dataset or a cmi estimator is required")
    return KnnCmiEstimator(d, k=k), d.n_cols


def forward_phase(d, i: int, alpha: float = DEFAULT_ALPHA,
                  k: int = DEFAULT_K, *, cmi: CmiFn | None = None) -> set[int]:
    """Grow a candidate blanket for node i.

    Repeatedly add the candidate j maximizing I(x_i; x_j | cmb) (lowest
    index on ties) while that maximum exceeds alpha.
    """
    est, n = _resolve(d, k, cmi)
    cmb: list[int] = []
    pool = [j for j in range(n) if j != i]
    while pool:
        best_j = None
        best_v = -float("inf")
        cond = tuple(sorted(cmb))
        for j in pool:
            v = est((i,), (j,), cond)
            if v > best_v:
                best_j, best_v = j, v
        if best_v > alpha:
            cmb.append(best_j)
            pool.remove(best_j)
        else:
            break
    return set(cmb)


def backward_phase(d, i: int, cmb: Sequence[int],
                   alpha: float = DEFAULT_ALPHA, k: int = DEFAULT_K, *,
                   cmi: CmiFn | None = None) -> set[int]:
    """Prune a candidate blanket for node i.

    Members are scanned in ascending index over a snapshot; j is dropped
    when I(x_i; x_j | cmb \\ {j}) falls below alpha, with cmb updated
    immediately after each removal.
    """
    est, _ = _resolve(d, k, cmi)
    current = set(cmb)
    for j in sorted(cmb):
        v = est((i,), (j,), tuple(sorted(current - {j})))
        if v < alpha:
            current.discard(j)
    return current


def symmetry_check(blankets: Sequence[Sequence[int]]) -> MarkovBlankets:
    """Keep j in blanket i only when i sits in the snapshot of blanket j.

    All membership tests read the pre-check snapshot, so removal order
    cannot cascade.
    """
    snap = [frozenset(b) for b in blankets]
    for i, b in enumerate(snap):
        for j in b:
            if not (0 <= j < len(snap)) or j == i:
                raise ValueError(f"blanket {i} holds invalid member {j}")
    kept = tuple(frozenset(j for j in b if i in snap[j])
                 for i, b in enumerate(snap))
    return MarkovBlankets(kept)


def improved_iamb(d, alpha: float = DEFAULT_ALPHA, k: int = DEFAULT_K, *,
                  cmi: CmiFn | None = None) -> MarkovBlankets:
    """Forward growth, backward pruning, then the symmetry check.

    Worst case O(n^3) estimator evaluations over all nodes.
    """
    est, n = _resolve(d, k, cmi)
    raw = []
    for i in range(n):
        cand = forward_phase(d, i, alpha, k, cmi=est)
        raw.append(backward_phase(d, i, cand, alpha, k, cmi=est))
    return symmetry_check(raw)
