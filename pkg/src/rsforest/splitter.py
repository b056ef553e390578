"""Node splitting: exemplar pairs, distance projections and Gini thresholds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import _kernels
from .data import Dataset, FeatureColumn, Kind, has_variation

REDRAW_BUDGET = 10
DISPERSION_SUBSAMPLE = 20


@dataclass(frozen=True)
class SplitCandidate:
    """A fitted split: examples with ``projection <= threshold`` go left.

    The projection of ``x`` is ``d(exemplar_q, x) - d(exemplar_p, x)`` on
    feature ``feature_index``. ``p_index``/``q_index`` remember which training
    rows supplied the exemplars; they are bookkeeping only.
    """

    feature_index: int
    exemplar_p: Any
    exemplar_q: Any
    threshold: float
    impurity: float
    balance: int
    p_index: int | None = field(default=None, compare=False)
    q_index: int | None = field(default=None, compare=False)
    projection: np.ndarray | None = field(default=None, compare=False, repr=False)


def gini(counts) -> float:
    """Gini index ``1 - sum(p_c^2)`` of a node with per-class ``counts``."""
    counts = [int(c) for c in counts]
    n = sum(counts)
    if n < 1:
        raise ValueError("Gini index of an empty node")
    return (n * n - sum(c * c for c in counts)) / (n * n)


def weighted_gini(left_counts, right_counts) -> float:
    """Size-weighted mean of the children's Gini indices."""
    left = [int(c) for c in left_counts]
    right = [int(c) for c in right_counts]
    nl, nr = sum(left), sum(right)
    if nl < 1 or nr < 1:
        raise ValueError("weighted Gini needs two non-empty children")
    n = nl + nr
    # one exact-integer division: equal impurities compare equal
    den = n * nl * nr
    return (den - sum(c * c for c in left) * nr - sum(c * c for c in right) * nl) / den


def best_threshold(projection, labels):
    """Best ``projection <= thr`` split of a node.

    Every unique projection value except the largest is tried. Returns
    ``(threshold, impurity, balance)`` minimizing weighted Gini, then
    ``|n_left - n_right|``, then threshold; ``None`` if the projection is
    constant.
    """
    proj = np.asarray(projection, dtype=float)
    lab = np.asarray(labels, dtype=np.int64)
    if proj.shape != lab.shape:
        raise ValueError(f"length mismatch: {proj.shape[0]} projections, {lab.shape[0]} labels")
    order = np.argsort(proj, kind="stable")
    sp = proj[order]
    pos, g, bal = _kernels.scan_thresholds(sp, lab[order])
    if pos < 0:
        return None
    return float(sp[pos]), float(g), int(bal)


def project(column: FeatureColumn, measure, x_p, x_q, indices) -> np.ndarray:
    """``d(x_q, x_i) - d(x_p, x_i)`` for each indexed example of ``column``."""
    kind = getattr(measure, "kind", None)
    if kind is not None and kind is not column.kind:
        raise TypeError(f"measure {measure.name!r} accepts {kind.value}, column is {column.kind.value}")
    dist = measure.bind(column) if hasattr(measure, "bind") else measure
    values = column.values
    return np.array([dist(x_q, values[i]) - dist(x_p, values[i]) for i in indices], dtype=float)


def _uses_fast_path(column: FeatureColumn) -> bool:
    return column.kind is Kind.NUMERIC and column.measure == "euclidean"


def _draw_index(rng, n: int) -> int:
    # cheaper than Generator.integers for scalar draws
    return min(n - 1, int(rng.random() * n))


def _node_projection(ds: Dataset, j: int, p: int, q: int, idx: np.ndarray, fast: bool) -> np.ndarray:
    column = ds.columns[j]
    if fast and _uses_fast_path(column):
        v = column.numeric_array
        # same arithmetic as going through the measure, minus the calls
        return _kernels.numeric_projection(v[idx], v[p], v[q])
    cache = ds.distances(j)
    return cache.between(q, idx) - cache.between(p, idx)


def _dispersion(ds: Dataset, j: int, members: np.ndarray, rng) -> float:
    """Within-class spread of feature ``j``: variance or mean squared distance."""
    if members.size < 2:
        return 0.0
    column = ds.columns[j]
    if column.kind is Kind.NUMERIC:
        return float(_kernels.sample_variance(column.numeric_array[members]))
    if members.size > DISPERSION_SUBSAMPLE:
        members = rng.permutation(members)[:DISPERSION_SUBSAMPLE]
    cache = ds.distances(j)
    total = 0.0
    for a in range(members.size - 1):
        d = cache.between(members[a], members[a + 1:])
        total += float(np.dot(d, d))
    k = members.size
    return total / (k * (k - 1) / 2)


def _class_members(ds: Dataset, idx: np.ndarray):
    y = ds.y[idx]
    return idx[y == 0], idx[y == 1]


def _reference_class(ds, j, members, rng) -> int:
    d0 = _dispersion(ds, j, members[0], rng)
    d1 = _dispersion(ds, j, members[1], rng)
    return 0 if d0 <= d1 else 1


def reference_class(ds: Dataset, j: int, indices, rng) -> int:
    """Class with the smallest within-class dispersion on feature ``j`` (ties -> 0)."""
    idx = np.asarray(indices, dtype=np.int64)
    return _reference_class(ds, j, _class_members(ds, idx), rng)


def _draw_pair(ds, j, members, c1, rng):
    same, other = members[c1], members[1 - c1]
    if same.size == 0 or other.size == 0:
        return None
    keys = ds.columns[j].value_keys
    other_keys = keys[other]
    for _ in range(REDRAW_BUDGET):
        p = int(same[_draw_index(rng, same.size)])
        candidates = other[other_keys != keys[p]]
        if candidates.size:
            return p, int(candidates[_draw_index(rng, candidates.size)])
    return None


def draw_pair(ds: Dataset, j: int, indices, c1: int, rng):
    """Draw ``x_p`` from class ``c1`` and a differing ``x_q`` from the other class.

    Returns dataset indices ``(p, q)``, or ``None`` once the redraw budget is spent.
    """
    idx = np.asarray(indices, dtype=np.int64)
    return _draw_pair(ds, j, _class_members(ds, idx), c1, rng)


def select_exemplar_pair(ds: Dataset, j: int, indices, rng):
    """Reference class by dispersion, then a pair of differing exemplars."""
    idx = np.asarray(indices, dtype=np.int64)
    members = _class_members(ds, idx)
    return _draw_pair(ds, j, members, _reference_class(ds, j, members, rng), rng)


def eligible_features(ds: Dataset, idx: np.ndarray) -> list[int]:
    """Features showing at least two distinct values among the node's examples."""
    keys = _stacked_keys(ds)
    node = keys[idx]
    varies = node.min(axis=0) != node.max(axis=0)
    out = []
    for j, col in enumerate(ds.columns):
        if col.kind is Kind.PRECOMPUTED:
            if has_variation(col, idx):
                out.append(j)
        elif varies[j]:
            out.append(j)
    return out


def _stacked_keys(ds: Dataset) -> np.ndarray:
    keys = ds._caches.get("keys")
    if keys is None:
        keys = ds._caches["keys"] = np.column_stack([c.value_keys for c in ds.columns])
    return keys


def find_best_split(
    ds: Dataset,
    indices,
    max_features: int,
    max_pairs: int,
    rng,
    *,
    fast_numeric: bool = True,
    observer: Callable | None = None,
) -> SplitCandidate | None:
    """Best split of a node over ``max_features`` sampled features.

    Features are drawn without replacement from those that vary on the node;
    each gets ``max_pairs`` exemplar pairs. The winner minimizes
    (impurity, balance); earlier candidates win exact ties. ``observer`` is
    called as ``observer(feature, projection, labels)`` for every projection
    evaluated.
    """
    idx = np.asarray(indices, dtype=np.int64)
    labels = ds.y[idx]
    eligible = eligible_features(ds, idx)
    if not eligible:
        return None
    k = min(max_features, len(eligible))
    chosen = rng.permutation(np.asarray(eligible))[:k]
    members = _class_members(ds, idx)

    best = None
    best_pq = None
    for j in chosen.tolist():
        c1 = _reference_class(ds, j, members, rng)
        quick = fast_numeric and observer is None and _uses_fast_path(ds.columns[j])
        for _ in range(max_pairs):
            pair = _draw_pair(ds, j, members, c1, rng)
            if pair is None:
                continue
            p, q = pair
            if quick:
                v = ds.columns[j].numeric_array
                thr, g, bal = _kernels.numeric_split(v[idx], labels, v[p], v[q])
                if np.isnan(thr):
                    continue
            else:
                proj = _node_projection(ds, j, p, q, idx, fast_numeric)
                if observer is not None:
                    observer(j, proj, labels)
                found = best_threshold(proj, labels)
                if found is None:
                    continue
                thr, g, bal = found
            if best is None or g < best[1] or (g == best[1] and bal < best[2]):
                best = (float(thr), float(g), int(bal))
                best_pq = (j, p, q)
    if best is None:
        return None
    j, p, q = best_pq
    values = ds.columns[j].values
    proj = _node_projection(ds, j, p, q, idx, fast_numeric)
    return SplitCandidate(j, values[p], values[q], best[0], best[1], best[2], p, q, proj)
