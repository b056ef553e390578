"""
One forest, many kinds of features
===================================

A toy dataset mixing a number, a time series and a graph per example. Each
column keeps its own distance; every split projects the examples onto a
pair of exemplars of a single column.
"""

import tempfile
from pathlib import Path

import numpy as np

from rsforest import Dataset, FeatureColumn, Graph, Hyperparams, fit, load_manifest, load_model, predict, predict_proba, save_model, write_manifest
from rsforest.evaluation import auc

rng = np.random.default_rng(1)
n = 120
y = np.repeat([0, 1], n // 2)


def ring_or_star(c):
    # class 1 graphs look like stars, class 0 like noisy rings
    k = 8
    if c:
        edges = [(0, i) for i in range(1, k)]
    else:
        edges = [(i, (i + 1) % k) for i in range(k)]
    extra = [(i, j) for i in range(k) for j in range(i + 1, k) if rng.random() < 0.08]
    return Graph.from_edges(k, set(map(tuple, map(sorted, edges))) | set(extra))


ds = Dataset(
    [
        FeatureColumn("age", "numeric", rng.normal(50, 10, n), "euclidean"),
        FeatureColumn("signal", "timeseries", [tuple(np.sin(np.linspace(0, 3 + c, rng.integers(20, 30))) + rng.normal(0, 0.3, 1)) for c in y], "dtw"),
        FeatureColumn("network", "graph", [ring_or_star(c) for c in y], "degreedivergence"),
    ],
    [["healthy", "sick"][c] for c in y],
    name="toy-mixed",
)

###############################################################################
# Datasets round-trip through a manifest directory (one file per column).
with tempfile.TemporaryDirectory() as tmp:
    manifest = write_manifest(ds, Path(tmp) / "toy")
    ds = load_manifest(manifest)
    print("loaded", ds.n, "examples with columns", [c.name for c in ds.columns])

    train = rng.permutation(n)[: n // 2]
    test = np.setdiff1d(np.arange(n), train)
    model = fit(ds, Hyperparams(max_trees=40, seed=3), indices=train)

    # score held-out rows; the dataset's distance cache is reused
    proba = predict_proba(model, None, indices=test, training_data=ds)
    print("held-out AUC:", round(auc(proba[:, 1], ds.y[test]), 3))

    ###########################################################################
    # Models are JSON files; exemplars are stored with their kind.
    path = Path(tmp) / "model.json"
    save_model(model, path)
    again = load_model(path)
    rows = [ds.row(i) for i in test[:5]]
    print("predictions after reload:", predict(again, rows))
