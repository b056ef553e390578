"""Heterogeneous datasets: mixed-kind feature columns with per-column distances.

Values are plain, hashable Python objects so that structural equality is just
``==``:

* numeric      -> ``float``
* setseq       -> ``tuple[frozenset[str], ...]``
* timeseries   -> ``tuple[float, ...]``
* graph        -> :class:`Graph`
* precomputed  -> :class:`Ref` (row index into the column's distance matrix)
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class Kind(str, Enum):
    NUMERIC = "numeric"
    SETSEQ = "setseq"
    TIMESERIES = "timeseries"
    GRAPH = "graph"
    PRECOMPUTED = "precomputed"


class DatasetError(ValueError):
    """Raised for malformed manifests, column files or datasets."""

    def __init__(self, message: str | list[str]):
        self.violations = [message] if isinstance(message, str) else list(message)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0 .. n-1``.

    Edges are stored as ``(u, v)`` pairs with ``u < v``.
    """

    n: int
    edges: frozenset = frozenset()

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        normalized = set()
        for e in edges:
            u, v = (int(x) for x in e)
            if not (0 <= u < n and 0 <= v < n):
                raise DatasetError(f"edge ({u}, {v}) outside node range [0, {n})")
            if u == v:
                raise DatasetError(f"self-loop on node {u}")
            pair = (u, v) if u < v else (v, u)
            if pair in normalized:
                raise DatasetError(f"duplicate edge ({pair[0]}, {pair[1]})")
            normalized.add(pair)
        return cls(int(n), frozenset(normalized))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def laplacian(self) -> np.ndarray:
        lap = np.zeros((self.n, self.n))
        for u, v in self.edges:
            lap[u, v] = lap[v, u] = -1.0
        lap[np.diag_indices(self.n)] = -lap.sum(axis=1)
        return lap


@dataclass(frozen=True)
class Ref:
    """Index of an object in a precomputed distance matrix."""

    index: int


def make_setseq(sets) -> tuple:
    return tuple(frozenset(str(item) for item in s) for s in sets)


def make_timeseries(values) -> tuple:
    return tuple(float(v) for v in values)


def _maybe_series(v):
    try:
        return make_timeseries(v)
    except (TypeError, ValueError):
        return v  # left for validate_dataset to report


@dataclass(frozen=True, eq=False)
class FeatureColumn:
    name: str
    kind: Kind
    values: tuple
    measure: str
    matrix: np.ndarray | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        values = tuple(self.values)
        if kind is Kind.NUMERIC:
            values = tuple(float(v) if isinstance(v, (int, float, np.number)) else v for v in values)
        elif kind is Kind.SETSEQ:
            values = tuple(v if isinstance(v, tuple) else make_setseq(v) for v in values)
        elif kind is Kind.TIMESERIES:
            values = tuple(
                v if isinstance(v, tuple) and all(type(x) is float for x in v) else _maybe_series(v) for v in values
            )
        elif kind is Kind.PRECOMPUTED:
            values = tuple(Ref(int(v)) if isinstance(v, (int, np.integer)) else v for v in values)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "values", values)
        if self.matrix is not None:
            m = np.array(self.matrix, dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    def __len__(self):
        return len(self.values)

    @cached_property
    def value_keys(self) -> np.ndarray:
        """Integer id per example; equal ids iff structurally equal values."""
        ids: dict[Any, int] = {}
        if self.kind is Kind.PRECOMPUTED:
            # identical matrix rows denote the same object
            return np.array(
                [ids.setdefault(self.matrix[v.index].tobytes(), len(ids)) for v in self.values], dtype=np.int64
            )
        return np.array([ids.setdefault(v, len(ids)) for v in self.values], dtype=np.int64)

    @cached_property
    def numeric_array(self) -> np.ndarray:
        if self.kind is not Kind.NUMERIC:
            raise TypeError(f"column {self.name!r} is not numeric")
        arr = np.array(self.values, dtype=float)
        arr.setflags(write=False)
        return arr

    def distance(self):
        """Pairwise distance function over this column's values."""
        from .distances import resolve

        return resolve(self.kind, self.measure).bind(self)


@dataclass(eq=False)
class Dataset:
    columns: tuple
    labels: tuple
    name: str = "dataset"
    _caches: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.labels = tuple(str(y) for y in self.labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def p(self) -> int:
        return len(self.columns)

    @cached_property
    def class_values(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    @cached_property
    def y(self) -> np.ndarray:
        """Labels as class indices into :attr:`class_values`."""
        index = {c: i for i, c in enumerate(self.class_values)}
        arr = np.array([index[v] for v in self.labels], dtype=np.int64)
        arr.setflags(write=False)
        return arr

    def row(self, i: int) -> list:
        return [col.values[i] for col in self.columns]

    def distances(self, j: int):
        """Memoized pairwise distances for column ``j`` (shared across fits)."""
        cache = self._caches.get(j)
        if cache is None:
            from .distances import PairwiseCache

            cache = self._caches[j] = PairwiseCache(self.columns[j])
        return cache

    def subset(self, indices: Sequence[int]) -> "Dataset":
        indices = [int(i) for i in indices]
        cols = [
            FeatureColumn(c.name, c.kind, [c.values[i] for i in indices], c.measure, c.matrix)
            for c in self.columns
        ]
        return Dataset(cols, [self.labels[i] for i in indices], name=self.name)


def has_variation(column: FeatureColumn, indices) -> bool:
    """True iff at least two structurally distinct values occur at ``indices``."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("indices must be non-empty")
    if idx.min() < 0 or idx.max() >= len(column):
        raise IndexError(f"index out of bounds for column {column.name!r} of length {len(column)}")
    if column.kind is Kind.PRECOMPUTED:
        refs = np.unique([column.values[i].index for i in idx])
        sub = column.matrix[np.ix_(refs, refs)]
        return np.unique(sub, axis=0).shape[0] > 1
    keys = column.value_keys[idx]
    return bool(keys.min() != keys.max())


def _value_problems(kind: Kind, value, matrix) -> str | None:
    if kind is Kind.NUMERIC:
        if not isinstance(value, float) or not math.isfinite(value):
            return "numeric value must be a finite float"
    elif kind is Kind.SETSEQ:
        if not isinstance(value, tuple) or not all(isinstance(s, frozenset) for s in value):
            return "set-sequence must be a tuple of frozensets"
        if any(len(s) == 0 for s in value):
            return "set-sequence contains an empty set"
        if any(not isinstance(it, str) for s in value for it in s):
            return "set items must be strings"
    elif kind is Kind.TIMESERIES:
        if not isinstance(value, tuple) or len(value) == 0:
            return "time series must be a non-empty tuple of floats"
        if not all(isinstance(v, float) and math.isfinite(v) for v in value):
            return "time series values must be finite floats"
    elif kind is Kind.GRAPH:
        if not isinstance(value, Graph):
            return "graph value must be a Graph"
        for u, v in value.edges:
            if not (0 <= u < v < value.n):
                return f"edge ({u}, {v}) invalid for {value.n}-node graph"
    elif kind is Kind.PRECOMPUTED:
        if not isinstance(value, Ref):
            return "precomputed value must be a Ref"
        if matrix is not None and not (0 <= value.index < matrix.shape[0]):
            return f"reference {value.index} outside matrix bounds"
    return None


def validate_dataset(ds: Dataset) -> None:
    """Check every dataset invariant; raise :class:`DatasetError` listing all violations."""
    from .distances import REGISTRY

    problems = []
    n = ds.n
    if n < 2:
        problems.append(f"need at least 2 examples, got {n}")
    if ds.p < 1:
        problems.append("dataset has no feature columns")
    classes = set(ds.labels)
    if len(classes) < 2:
        problems.append("fewer than two classes")
    elif len(classes) > 2:
        problems.append(f"binary classification only (found {len(classes)} classes)")
    for col in ds.columns:
        where = f"column {col.name!r}"
        if len(col.values) != n:
            problems.append(f"{where}: has {len(col.values)} values, expected {n}")
        if (col.kind, col.measure) not in REGISTRY:
            valid = sorted(name for kind, name in REGISTRY if kind is col.kind)
            problems.append(f"{where}: unknown measure {col.measure!r} for kind {col.kind.value} (valid: {valid})")
        if col.kind is Kind.PRECOMPUTED:
            m = col.matrix
            if m is None:
                problems.append(f"{where}: precomputed column requires a matrix")
            elif m.ndim != 2 or m.shape[0] != m.shape[1]:
                problems.append(f"{where}: matrix not square")
            else:
                if not np.array_equal(m, m.T):
                    problems.append(f"{where}: matrix not symmetric")
                if np.any(np.diag(m) != 0):
                    problems.append(f"{where}: matrix diagonal not zero")
                if np.any(m < 0) or not np.all(np.isfinite(m)):
                    problems.append(f"{where}: matrix has negative or non-finite entries")
        elif col.matrix is not None:
            problems.append(f"{where}: only precomputed columns may carry a matrix")
        for i, v in enumerate(col.values):
            issue = _value_problems(col.kind, v, col.matrix)
            if issue:
                problems.append(f"{where}, record {i}: {issue}")
                break
        if col.kind is Kind.TIMESERIES and col.measure in ("euclidean", "cosine"):
            if len({len(v) for v in col.values}) > 1:
                problems.append(f"{where}: measure {col.measure!r} needs equal-length series")
    if problems:
        raise DatasetError(problems)


# -- manifest I/O ------------------------------------------------------------


def _read_lines(path: Path) -> list[str]:
    with open(path, newline="") as fh:
        return [line.rstrip("\r\n") for line in fh if line.strip()]


def _parse_column(kind: Kind, path: Path, name: str) -> tuple[list, np.ndarray | None]:
    def fail(i, msg):
        raise DatasetError(f"column {name!r}, record {i}: {msg}")

    values: list = []
    matrix = None
    if kind is Kind.NUMERIC:
        for i, line in enumerate(_read_lines(path)):
            try:
                v = float(line.strip())
            except ValueError:
                fail(i, f"not a number: {line!r}")
            if not math.isfinite(v):
                fail(i, "non-finite value")
            values.append(v)
    elif kind is Kind.TIMESERIES:
        with open(path, newline="") as fh:
            for i, row in enumerate(r for r in csv.reader(fh) if r):
                try:
                    series = make_timeseries(x for x in row if x.strip())
                except ValueError:
                    fail(i, "non-numeric entry")
                if not series:
                    fail(i, "empty time series")
                if not all(math.isfinite(v) for v in series):
                    fail(i, "non-finite value")
                values.append(series)
    elif kind is Kind.SETSEQ:
        for i, line in enumerate(_read_lines(path)):
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                fail(i, f"invalid JSON ({exc.msg})")
            if not isinstance(raw, list) or not all(isinstance(s, list) for s in raw):
                fail(i, "expected an array of arrays")
            if any(not s for s in raw):
                fail(i, "empty set")
            if any(not isinstance(it, str) for s in raw for it in s):
                fail(i, "set items must be strings")
            values.append(make_setseq(raw))
    elif kind is Kind.GRAPH:
        for i, line in enumerate(_read_lines(path)):
            try:
                raw = json.loads(line)
                values.append(Graph.from_edges(int(raw["n"]), raw.get("edges", [])))
            except json.JSONDecodeError as exc:
                fail(i, f"invalid JSON ({exc.msg})")
            except (KeyError, TypeError, ValueError) as exc:
                fail(i, str(exc))
    elif kind is Kind.PRECOMPUTED:
        try:
            matrix = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DatasetError(f"column {name!r}: malformed matrix ({exc})") from None
        values = [Ref(i) for i in range(matrix.shape[0])]
    return values, matrix


def load_manifest(path) -> Dataset:
    """Load and validate a dataset described by a JSON manifest.

    Column and label file paths are resolved relative to the manifest.
    """
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest {path} is not valid JSON: {exc.msg}") from None
    base = path.parent

    def resolve_file(entry, what):
        try:
            f = base / entry["file"]
        except (KeyError, TypeError):
            raise DatasetError(f"{what}: missing 'file'") from None
        if not f.is_file():
            raise DatasetError(f"{what}: file not found: {f}")
        return f

    try:
        labels_file = resolve_file(manifest["labels"], "labels")
        col_specs = manifest["columns"]
    except (KeyError, TypeError):
        raise DatasetError("manifest requires 'labels' and 'columns'") from None
    labels = [line.strip() for line in _read_lines(labels_file)]

    columns = []
    for spec in col_specs:
        name = str(spec.get("name", f"col{len(columns)}"))
        try:
            kind = Kind(spec["kind"])
        except (KeyError, ValueError):
            raise DatasetError(f"column {name!r}: unknown kind {spec.get('kind')!r}") from None
        measure = spec.get("measure")
        from .distances import REGISTRY

        if (kind, measure) not in REGISTRY:
            valid = sorted(m for k, m in REGISTRY if k is kind)
            raise DatasetError(f"column {name!r}: unknown measure {measure!r} for kind {kind.value} (valid: {valid})")
        values, matrix = _parse_column(kind, resolve_file(spec, f"column {name!r}"), name)
        if len(values) != len(labels):
            raise DatasetError(f"column {name!r}: {len(values)} records but {len(labels)} labels")
        columns.append(FeatureColumn(name, kind, values, measure, matrix))

    ds = Dataset(columns, labels, name=str(manifest.get("name", path.parent.name or "dataset")))
    validate_dataset(ds)
    return ds


def write_manifest(ds: Dataset, directory, metadata: dict | None = None) -> Path:
    """Write ``ds`` as a manifest plus one file per column; returns the manifest path.

    ``metadata`` is stored verbatim under the manifest's ``"metadata"`` key.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "labels.csv").write_text("".join(f"{y}\n" for y in ds.labels))
    specs = []
    for j, col in enumerate(ds.columns):
        stem = f"col{j:03d}"
        if col.kind is Kind.NUMERIC:
            fname = stem + ".csv"
            text = "".join(f"{float(v)!r}\n" for v in col.values)
        elif col.kind is Kind.TIMESERIES:
            fname = stem + ".csv"
            text = "".join(",".join(repr(float(x)) for x in v) + "\n" for v in col.values)
        elif col.kind is Kind.SETSEQ:
            fname = stem + ".jsonl"
            text = "".join(json.dumps([sorted(s) for s in v]) + "\n" for v in col.values)
        elif col.kind is Kind.GRAPH:
            fname = stem + ".jsonl"
            text = "".join(
                json.dumps({"n": g.n, "edges": [list(e) for e in g.sorted_edges()]}) + "\n" for g in col.values
            )
        else:
            if any(v.index != i for i, v in enumerate(col.values)):
                raise DatasetError(f"column {col.name!r}: only identity-ordered references can be written")
            fname = stem + ".csv"
            text = "".join(",".join(repr(float(x)) for x in row) + "\n" for row in col.matrix)
        (directory / fname).write_text(text)
        specs.append({"name": col.name, "kind": col.kind.value, "measure": col.measure, "file": fname})
    manifest = {"name": ds.name, "labels": {"file": "labels.csv"}, "columns": specs}
    if metadata:
        manifest["metadata"] = metadata
    out = directory / "manifest.json"
    out.write_text(json.dumps(manifest, indent=2) + "\n")
    return out
