"""Bagged ensembles of Random Similarity Trees and their JSON model format."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, FeatureColumn, Graph, Kind, Ref, make_setseq, make_timeseries, validate_dataset
from .distances import resolve
from .splitter import SplitCandidate
from .tree import Internal, Leaf, StoppingRule, TreeNode, build_tree, iter_nodes, predict_tree, route_batch

MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """A model file is truncated, malformed or otherwise unreadable."""


class ModelVersionError(ModelFormatError):
    """A model file carries a version tag this library does not understand."""


@dataclass(frozen=True)
class Hyperparams:
    """Forest settings.

    ``max_features`` is a fraction of the feature count when given as a float
    (``ceil(fraction * p)``) and an absolute count when given as an int.
    """

    max_trees: int = 100
    max_features: float | int = 0.5
    max_pairs: int = 1
    stopping: StoppingRule = field(default_factory=StoppingRule)
    seed: int = 0

    def __post_init__(self):
        if self.max_trees < 1:
            raise ValueError("max_trees must be >= 1")
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be >= 1")
        mf = self.max_features
        if isinstance(mf, bool) or not isinstance(mf, (int, float)):
            raise TypeError("max_features must be an int or a float")
        if isinstance(mf, float) and not 0.0 < mf <= 1.0:
            raise ValueError("fractional max_features must lie in (0, 1]")
        if isinstance(mf, int) and mf < 1:
            raise ValueError("max_features must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def resolve_max_features(self, p: int) -> int:
        if isinstance(self.max_features, float):
            return max(1, min(p, math.ceil(self.max_features * p)))
        return min(p, self.max_features)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        d = dict(d)
        stopping = StoppingRule(**d.pop("stopping", {}))
        return cls(stopping=stopping, **d)


@dataclass
class ForestModel:
    hyperparams: Hyperparams
    classes: tuple
    columns: list  # [{"name", "kind", "measure"}]
    trees: list = field(default_factory=list)


def substream(*key: int) -> np.random.Generator:
    """Independent generator for an integer key path such as ``(seed, tree)``."""
    seed, *spawn = key
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(spawn)))


def derive_seed(*key: int) -> int:
    """A 64-bit seed derived from an integer key path."""
    seed, *spawn = key
    return int(np.random.SeedSequence(entropy=seed, spawn_key=tuple(spawn)).generate_state(1, np.uint64)[0])


def bootstrap_sample(n: int, rng) -> np.ndarray:
    """``n`` uniform draws with replacement from ``range(n)``."""
    if n < 1:
        raise ValueError("bootstrap needs n >= 1")
    return rng.integers(0, n, size=n)


def fit(
    ds: Dataset,
    hp: Hyperparams | None = None,
    *,
    indices=None,
    workers: int = 1,
    fast_numeric: bool = True,
    observer: Callable | None = None,
) -> ForestModel:
    """Train a forest on ``ds`` (or on the rows ``indices`` of it).

    Tree ``t`` draws all of its randomness from ``substream(seed, t)``, so the
    result does not depend on ``workers``.
    """
    hp = hp or Hyperparams()
    validate_dataset(ds)
    rows = np.arange(ds.n) if indices is None else np.asarray(indices, dtype=np.int64)
    max_features = hp.resolve_max_features(ds.p)

    def grow(t):
        rng = substream(hp.seed, t)
        sample = rows[bootstrap_sample(rows.size, rng)]
        return build_tree(
            ds, sample, max_features, hp.max_pairs, hp.stopping, rng,
            fast_numeric=fast_numeric, observer=observer,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(grow, range(hp.max_trees)))
    else:
        trees = [grow(t) for t in range(hp.max_trees)]
    columns = [{"name": c.name, "kind": c.kind.value, "measure": c.measure} for c in ds.columns]
    return ForestModel(hp, ds.class_values, columns, trees)


# -- prediction ----------------------------------------------------------------


def _check_columns(model: ForestModel, ds: Dataset):
    if ds.p != len(model.columns):
        raise ValueError(f"model expects {len(model.columns)} features, got {ds.p}")
    for meta, col in zip(model.columns, ds.columns):
        if meta["kind"] != col.kind.value or meta["measure"] != col.measure:
            raise ValueError(
                f"feature {meta['name']!r}: model expects {meta['kind']}/{meta['measure']}, "
                f"got {col.kind.value}/{col.measure}"
            )


def _value_projector(ds: Dataset):
    binders = [c.distance() for c in ds.columns]

    def projection(split: SplitCandidate, rows: np.ndarray) -> np.ndarray:
        col = ds.columns[split.feature_index]
        if col.kind is Kind.NUMERIC and col.measure == "euclidean":
            x = col.numeric_array[rows]
            return np.abs(split.exemplar_q - x) - np.abs(split.exemplar_p - x)
        d = binders[split.feature_index]
        vals = col.values
        return np.array([d(split.exemplar_q, vals[r]) - d(split.exemplar_p, vals[r]) for r in rows.tolist()])

    return projection


def _cached_projector(ds: Dataset):
    def projection(split: SplitCandidate, rows: np.ndarray) -> np.ndarray:
        col = ds.columns[split.feature_index]
        if col.kind is Kind.NUMERIC and col.measure == "euclidean":
            v = col.numeric_array
            x = v[rows]
            return np.abs(v[split.q_index] - x) - np.abs(v[split.p_index] - x)
        cache = ds.distances(split.feature_index)
        return cache.between(split.q_index, rows) - cache.between(split.p_index, rows)

    return projection


def _as_dataset(model: ForestModel, examples) -> Dataset:
    if isinstance(examples, Dataset):
        _check_columns(model, examples)
        return examples
    rows = [list(r) for r in examples]
    cols = []
    for j, meta in enumerate(model.columns):
        if meta["kind"] == Kind.PRECOMPUTED.value:
            raise ValueError(
                f"feature {meta['name']!r} uses precomputed distances; pass a Dataset whose "
                "matrix covers the examples to score"
            )
        values = [r[j] for r in rows]
        cols.append(FeatureColumn(meta["name"], meta["kind"], values, meta["measure"]))
    return Dataset(cols, [model.classes[0]] * len(rows))


def predict_proba(model: ForestModel, examples, *, indices=None, training_data: Dataset | None = None) -> np.ndarray:
    """Mean of the trees' leaf class frequencies, one row per example.

    ``examples`` is a :class:`Dataset` or a sequence of rows of feature values.
    Passing ``training_data`` (the dataset the model was fit on, in this
    process) routes through its distance caches instead of recomputing
    distances; ``indices`` then selects its rows.
    """
    if training_data is not None:
        ds = training_data
        projection = _cached_projector(ds)
    else:
        ds = _as_dataset(model, examples)
        projection = _value_projector(ds)
    rows = np.arange(ds.n) if indices is None else np.asarray(indices, dtype=np.int64)
    m = len(model.classes)
    total = np.zeros((rows.size, m))
    for tree in model.trees:
        total += route_batch(tree, rows, projection, m)
    proba = total / len(model.trees)
    return proba / proba.sum(axis=1, keepdims=True)


def predict(model: ForestModel, examples, **kwargs) -> list:
    """Most probable class per example; ties go to the smaller class value."""
    proba = predict_proba(model, examples, **kwargs)
    return [model.classes[k] for k in np.argmax(proba, axis=1)]


# -- serialization ---------------------------------------------------------------


def _encode_value(kind: str, v):
    if kind == "numeric":
        return {"numeric": v}
    if kind == "setseq":
        return {"setseq": [sorted(s) for s in v]}
    if kind == "timeseries":
        return {"timeseries": list(v)}
    if kind == "graph":
        return {"graph": {"n": v.n, "edges": [list(e) for e in v.sorted_edges()]}}
    return {"precomputed": v.index}


def _decode_value(kind: str, obj):
    if not isinstance(obj, dict) or list(obj) != [kind]:
        raise ModelFormatError(f"exemplar tag does not match feature kind {kind!r}")
    v = obj[kind]
    if kind == "numeric":
        return float(v)
    if kind == "setseq":
        return make_setseq(v)
    if kind == "timeseries":
        return make_timeseries(v)
    if kind == "graph":
        return Graph.from_edges(v["n"], v["edges"])
    return Ref(int(v))


def _tree_to_list(root: TreeNode, columns) -> list:
    nodes = list(iter_nodes(root))
    pos = {id(n): i for i, n in enumerate(nodes)}
    out = []
    for n in nodes:
        if isinstance(n, Leaf):
            out.append({"leaf": list(n.class_counts), "depth": n.depth})
        else:
            s = n.split
            kind = columns[s.feature_index]["kind"]
            out.append({
                "feature": s.feature_index,
                "p": _encode_value(kind, s.exemplar_p),
                "q": _encode_value(kind, s.exemplar_q),
                "threshold": s.threshold,
                "impurity": s.impurity,
                "balance": s.balance,
                "depth": n.depth,
                "left": pos[id(n.left)],
                "right": pos[id(n.right)],
            })
    return out


def _tree_from_list(items: list, columns) -> TreeNode:
    built: list = [None] * len(items)
    for i in range(len(items) - 1, -1, -1):
        it = items[i]
        if "leaf" in it:
            built[i] = Leaf(tuple(int(c) for c in it["leaf"]), int(it["depth"]))
        else:
            j = int(it["feature"])
            kind = columns[j]["kind"]
            split = SplitCandidate(
                j, _decode_value(kind, it["p"]), _decode_value(kind, it["q"]),
                float(it["threshold"]), float(it["impurity"]), int(it["balance"]),
            )
            left, right = built[it["left"]], built[it["right"]]
            if left is None or right is None:
                raise ModelFormatError("child nodes must follow their parent")
            built[i] = Internal(split, left, right, int(it["depth"]))
    return built[0]


def model_to_dict(model: ForestModel) -> dict:
    return {
        "version": MODEL_VERSION,
        "hyperparams": model.hyperparams.to_dict(),
        "classes": list(model.classes),
        "columns": model.columns,
        "trees": [_tree_to_list(t, model.columns) for t in model.trees],
    }


def model_from_dict(doc: dict) -> ForestModel:
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError("not a model document (missing version)")
    if doc["version"] != MODEL_VERSION:
        raise ModelVersionError(f"unsupported model version {doc['version']!r} (expected {MODEL_VERSION})")
    try:
        columns = [dict(c) for c in doc["columns"]]
        for c in columns:
            resolve(c["kind"], c["measure"])
        hp = Hyperparams.from_dict(doc["hyperparams"])
        trees = [_tree_from_list(t, columns) for t in doc["trees"]]
        return ForestModel(hp, tuple(doc["classes"]), columns, trees)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"malformed model: {exc}") from None


def dumps_model(model: ForestModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def save_model(model: ForestModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> ForestModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file {path} is not valid JSON: {exc.msg}") from None
    return model_from_dict(doc)
