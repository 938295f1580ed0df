"""Tabular datasets: ingestion, typing, encoding and normalization.

Columns are either discrete (contiguous non-negative integer codes) or
continuous.  Categorical text columns are encoded to codes by the sorted
order of their distinct values, which keeps encode/decode lossless.
"""

from __future__ import annotations

import csv
from typing import Iterable, Mapping, Sequence

import numpy as np


class IngestionError(ValueError):
    """Raised for malformed input tables or config files."""


KINDS = ("discrete", "continuous")
DEFAULT_DISCRETE_CUTOFF = 20


class Dataset:
    """An N x n numeric table with per-column kinds.

    Parameters
    ----------
    names : column names.
    kinds : "discrete" or "continuous" per column.
    values : array-like of shape (N, n); stored as read-only float64.
    categories : optional per-column tuple of original category strings
        for columns that were encoded from text, None elsewhere.
    """

    __slots__ = ("names", "kinds", "values", "categories")

    def __init__(self, names: Sequence[str], kinds: Sequence[str], values,
                 categories: Sequence[tuple[str, ...] | None] | None = None):
        names = tuple(str(x) for x in names)
        kinds = tuple(kinds)
        vals = np.array(values, dtype=np.float64)
        if vals.ndim != 2:
            raise IngestionError(f"values must be 2-d, got shape {vals.shape}")
        if len(names) != vals.shape[1] or len(kinds) != vals.shape[1]:
            raise IngestionError(
                f"got {len(names)} names, {len(kinds)} kinds for "
                f"{vals.shape[1]} columns")
        for kind in kinds:
            if kind not in KINDS:
                raise IngestionError(f"unknown column kind {kind!r}")
        if not np.isfinite(vals).all():
            raise IngestionError("values must be finite")
        for j, kind in enumerate(kinds):
            if kind == "discrete":
                col = vals[:, j]
                if col.size and (np.any(col != np.floor(col)) or np.any(col < 0)):
                    raise IngestionError(
                        f"discrete column {j} ({names[j]!r}) must hold "
                        "non-negative integer codes")
        if categories is None:
            categories = (None,) * len(names)
        else:
            categories = tuple(tuple(c) if c is not None else None
                               for c in categories)
            if len(categories) != len(names):
                raise IngestionError("categories must match the column count")
        vals.setflags(write=False)
        self.names = names
        self.kinds = kinds
        self.values = vals
        self.categories = categories

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def all_discrete(self) -> bool:
        return all(k == "discrete" for k in self.kinds)

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def __repr__(self):
        return (f"Dataset({self.n_rows}x{self.n_cols}, "
                f"kinds={list(self.kinds)})")


def _encode_tokens(tokens: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Codes assigned by sorted order of the distinct values."""
    cats = tuple(sorted(set(tokens)))
    lookup = {c: i for i, c in enumerate(cats)}
    return np.array([lookup[t] for t in tokens], dtype=np.float64), cats


def _recode_integral(col: np.ndarray) -> np.ndarray:
    """Order-preserving recode of integral values to contiguous codes."""
    distinct = np.unique(col)
    lookup = {v: i for i, v in enumerate(distinct)}
    return np.array([lookup[v] for v in col], dtype=np.float64)


def _resolve_kind_spec(kind_spec, names: Sequence[str]) -> list[str]:
    if kind_spec == "auto" or kind_spec is None:
        return ["auto"] * len(names)
    if isinstance(kind_spec, Mapping):
        out = []
        for name in names:
            out.append(kind_spec.get(name, "auto"))
    else:
        out = list(kind_spec)
        if len(out) != len(names):
            raise IngestionError(
                f"kind_spec lists {len(out)} columns, table has {len(names)}")
    for k in out:
        if k not in ("auto", "discrete", "continuous", "categorical"):
            raise IngestionError(f"unknown kind spec {k!r}")
    return out


def load_csv(path, kind_spec="auto",
             cutoff: int = DEFAULT_DISCRETE_CUTOFF) -> Dataset:
    """Load a header-ed CSV into a Dataset.

    Column typing: an explicit kind in `kind_spec` wins; under "auto" a
    fully numeric column is discrete iff all values are integral and the
    distinct count is <= cutoff, else continuous, and a column with any
    non-numeric cell falls back to categorical encoding.  Malformed input
    (empty file, ragged rows, non-numeric cells in declared numeric
    columns) raises IngestionError naming the row and column.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError(f"{path}: {exc.strerror or exc}") from exc
    rows = [r for r in rows if r]  # ignore blank lines
    if not rows:
        raise IngestionError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise IngestionError(f"{path}: no data rows after the header")
    width = len(header)
    for ridx, row in enumerate(body, start=2):
        if len(row) != width:
            raise IngestionError(
                f"{path}: row {ridx} has {len(row)} cells, expected {width}")
    specs = _resolve_kind_spec(kind_spec, header)

    columns: list[np.ndarray] = []
    kinds: list[str] = []
    categories: list[tuple[str, ...] | None] = []
    for j, (name, spec) in enumerate(zip(header, specs)):
        tokens = [row[j].strip() for row in body]
        parsed = np.empty(len(tokens))
        bad_row = None
        for ridx, tok in enumerate(tokens):
            try:
                parsed[ridx] = float(tok)
            except ValueError:
                bad_row = ridx + 2
                break
        if spec == "categorical" or (spec == "auto" and bad_row is not None):
            col, cats = _encode_tokens(tokens)
            columns.append(col)
            kinds.append("discrete")
            categories.append(cats)
            continue
        if bad_row is not None:
            raise IngestionError(
                f"{path}: non-numeric value {tokens[bad_row - 2]!r} at "
                f"row {bad_row}, column {j} ({name!r})")
        if not np.isfinite(parsed).all():
            ridx = int(np.flatnonzero(~np.isfinite(parsed))[0]) + 2
            raise IngestionError(
                f"{path}: non-finite value at row {ridx}, column {j} "
                f"({name!r})")
        integral = bool(np.all(parsed == np.floor(parsed)))
        if spec == "discrete" or (spec == "auto" and integral
                                  and np.unique(parsed).size <= cutoff):
            if not integral:
                ridx = int(np.flatnonzero(parsed != np.floor(parsed))[0]) + 2
                raise IngestionError(
                    f"{path}: column {j} ({name!r}) declared discrete but "
                    f"row {ridx} holds a non-integral value")
            columns.append(_recode_integral(parsed))
            kinds.append("discrete")
            categories.append(None)
        else:
            columns.append(parsed)
            kinds.append("continuous")
            categories.append(None)
    return Dataset(header, kinds, np.column_stack(columns), categories)


def encode_categorical(names: Sequence[str],
                       rows: Iterable[Sequence[str]]) -> Dataset:
    """Encode a table of strings; codes follow sorted distinct order."""
    rows = [list(r) for r in rows]
    if not rows:
        raise IngestionError("encode_categorical needs at least one row")
    width = len(names)
    for ridx, row in enumerate(rows):
        if len(row) != width:
            raise IngestionError(
                f"row {ridx} has {len(row)} cells, expected {width}")
    columns = []
    categories = []
    for j in range(width):
        col, cats = _encode_tokens([str(row[j]) for row in rows])
        columns.append(col)
        categories.append(cats)
    return Dataset(names, ["discrete"] * width, np.column_stack(columns),
                   categories)


def decode_rows(d: Dataset) -> list[list[str]]:
    """Inverse of encode_categorical for datasets with stored categories."""
    for j, cats in enumerate(d.categories):
        if cats is None:
            raise IngestionError(
                f"column {j} ({d.names[j]!r}) has no stored categories")
    out = []
    for row in d.values:
        out.append([d.categories[j][
            int(code)] for j, code in enumerate(row)])
    return out


def normalize_minmax(d: Dataset) -> Dataset:
    """Scale each continuous column to [0, 1]; constant columns become 0.

    Discrete columns are untouched.  Applying the map twice equals
    applying it once.
    """
    vals = d.values.copy()
    for j, kind in enumerate(d.kinds):
        if kind != "continuous":
            continue
        col = vals[:, j]
        lo, hi = col.min(), col.max()
        if hi > lo:
            vals[:, j] = (col - lo) / (hi - lo)
        else:
            vals[:, j] = 0.0
    return Dataset(d.names, d.kinds, vals, d.categories)


def sample_rows(d: Dataset, m: int, seed: int) -> Dataset:
    """m rows drawn uniformly without replacement, deterministic in seed."""
    if not (0 < m <= d.n_rows):
        raise IngestionError(
            f"cannot sample {m} rows from a table with {d.n_rows}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(d.n_rows, size=m, replace=False)
    return Dataset(d.names, d.kinds, d.values[idx], d.categories)


def write_csv(d: Dataset, path) -> None:
    """Write a dataset with a header row; discrete columns as integers."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(d.names)
        discrete = [kind == "discrete" for kind in d.kinds]
        for row in d.values:
            writer.writerow([str(int(v)) if discrete[j] else repr(float(v))
                             for j, v in enumerate(row)])


def read_config(path) -> dict:
    """Parse a key=value config file.

    Recognized keys: `cutoff`, `seed`, `alpha`, `beta`, `k` and per-column
    `kind.<name>` entries; '#' starts a comment.
    """
    out: dict = {"kinds": {}}
    try:
        fh = open(path)
    except OSError as exc:
        raise IngestionError(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise IngestionError(
                    f"{path}: line {lineno} is not a key=value entry")
            key, value = (s.strip() for s in line.split("=", 1))
            if key.startswith("kind."):
                name = key[len("kind."):]
                if value not in ("auto", "discrete", "continuous",
                                 "categorical"):
                    raise IngestionError(
                        f"{path}: line {lineno}: unknown kind {value!r}")
                out["kinds"][name] = value
            elif key in ("cutoff", "seed", "k"):
                try:
                    out[key] = int(value)
                except ValueError:
                    raise IngestionError(
                        f"{path}: line {lineno}: {key} must be an integer")
            elif key in ("alpha", "beta"):
                try:
                    out[key] = float(value)
                except ValueError:
                    raise IngestionError(
                        f"{path}: line {lineno}: {key} must be a number")
            else:
                raise IngestionError(
                    f"{path}: line {lineno}: unknown key {key!r}")
    return out
