"""Single Random Similarity Trees: construction and routing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .data import Dataset
from .splitter import SplitCandidate, find_best_split


@dataclass(frozen=True)
class StoppingRule:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple
    depth: int

    def proba(self) -> np.ndarray:
        counts = np.asarray(self.class_counts, dtype=float)
        return counts / counts.sum()


@dataclass
class Internal:
    split: SplitCandidate
    left: "TreeNode" = None
    right: "TreeNode" = None
    depth: int = 0


TreeNode = Union[Leaf, Internal]


def build_tree(
    ds: Dataset,
    indices,
    max_features: int,
    max_pairs: int,
    stopping: StoppingRule,
    rng,
    *,
    fast_numeric: bool = True,
    observer: Callable | None = None,
) -> TreeNode:
    """Grow a tree on the (bootstrap) multiset ``indices`` of ``ds``.

    Nodes are expanded depth-first, left child first, so the rng stream is
    consumed in the same order as the textbook recursion.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cannot build a tree on an empty sample")
    m = len(ds.class_values)

    def make_node(node_idx, depth):
        counts = np.bincount(ds.y[node_idx], minlength=m)
        leaf = Leaf(tuple(int(c) for c in counts), depth)
        if np.count_nonzero(counts) < 2:
            return leaf, None
        if stopping.max_depth is not None and depth >= stopping.max_depth:
            return leaf, None
        if node_idx.size < stopping.min_samples_split:
            return leaf, None
        split = find_best_split(
            ds, node_idx, max_features, max_pairs, rng, fast_numeric=fast_numeric, observer=observer
        )
        if split is None:
            return leaf, None
        go_left = split.projection <= split.threshold
        n_left = int(np.count_nonzero(go_left))
        if min(n_left, node_idx.size - n_left) < stopping.min_samples_leaf:
            return leaf, None
        stored = SplitCandidate(
            split.feature_index, split.exemplar_p, split.exemplar_q, split.threshold,
            split.impurity, split.balance, split.p_index, split.q_index,
        )
        return Internal(stored, depth=depth), (node_idx[go_left], node_idx[~go_left])

    root, children = make_node(idx, 0)
    stack = []
    if children is not None:
        stack += [(root, "right", children[1]), (root, "left", children[0])]
    while stack:
        parent, side, node_idx = stack.pop()
        node, children = make_node(node_idx, parent.depth + 1)
        setattr(parent, side, node)
        if children is not None:
            stack += [(node, "right", children[1]), (node, "left", children[0])]
    return root


def _route(node: TreeNode, projection_at: Callable) -> Leaf:
    while isinstance(node, Internal):
        node = node.left if projection_at(node.split) <= node.split.threshold else node.right
    return node


def predict_tree(node: TreeNode, example: Sequence, distances: Sequence[Callable]) -> np.ndarray:
    """Class probabilities for one example given per-feature distance functions.

    At each internal node the example is projected onto the stored exemplar
    pair and sent left iff the projection is ``<= threshold``.
    """

    def projection_at(split):
        d = distances[split.feature_index]
        x = example[split.feature_index]
        return d(split.exemplar_q, x) - d(split.exemplar_p, x)

    return _route(node, projection_at).proba()


def route_batch(node: TreeNode, rows: np.ndarray, projection: Callable, n_classes: int) -> np.ndarray:
    """Leaf probabilities for many rows at once.

    ``projection(split, rows)`` must return the projections of ``rows`` on the
    split's exemplar pair; each internal node is evaluated once per batch.
    """
    rows = np.asarray(rows, dtype=np.int64)
    out = np.empty((rows.size, n_classes))
    stack = [(node, np.arange(rows.size))]
    while stack:
        cur, pos = stack.pop()
        if pos.size == 0:
            continue
        if isinstance(cur, Leaf):
            out[pos] = cur.proba()
            continue
        go_left = projection(cur.split, rows[pos]) <= cur.split.threshold
        stack += [(cur.right, pos[~go_left]), (cur.left, pos[go_left])]
    return out


def iter_nodes(node: TreeNode):
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Internal):
            stack += [cur.right, cur.left]


def tree_depth(node: TreeNode) -> int:
    return max(n.depth for n in iter_nodes(node))
