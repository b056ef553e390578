import json

import numpy as np
import pytest
from scipy import stats

from conftest import numeric_dataset
from rsforest import Dataset, FeatureColumn, Graph, Hyperparams, StoppingRule, auc, fit, load_model, predict, predict_proba, save_model
from rsforest.forest import ForestModel, ModelFormatError, ModelVersionError, bootstrap_sample, dumps_model, substream
from rsforest.synth import SynthConfig, generate
from rsforest.tree import Internal, Leaf, iter_nodes


def _margin_data(n=100, seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.uniform(0, 1, n // 2), rng.uniform(2, 3, n // 2)])
    return numeric_dataset(x, [0] * (n // 2) + [1] * (n // 2))


def _mixed(seed=0, n=40):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    y[:2] = [0, 1]
    graphs = [Graph.from_edges(5, [(i, j) for i in range(5) for j in range(i + 1, 5) if rng.random() < 0.3 + 0.3 * c]) for c in y]
    seqs = [[{"a", "b"} if c else {"c"}] * int(rng.integers(1, 4)) for c in y]
    series = [tuple(rng.normal(c, 1, size=int(rng.integers(3, 7)))) for c in y]
    return Dataset(
        [
            FeatureColumn("x", "numeric", rng.normal(size=n) + y, "euclidean"),
            FeatureColumn("g", "graph", graphs, "ipsenmikhailov"),
            FeatureColumn("s", "setseq", seqs, "editjaccard"),
            FeatureColumn("t", "timeseries", series, "dtw"),
        ],
        [["neg", "pos"][c] for c in y],
        name="mixed",
    )


def test_bootstrap_sample():
    s = bootstrap_sample(5, np.random.default_rng(0))
    assert s.shape == (5,) and s.min() >= 0 and s.max() < 5
    np.testing.assert_array_equal(bootstrap_sample(5, np.random.default_rng(3)), bootstrap_sample(5, np.random.default_rng(3)))
    with pytest.raises(ValueError):
        bootstrap_sample(0, np.random.default_rng(0))


def test_bootstrap_uniform_frequencies():
    rng = np.random.default_rng(1)
    counts = np.bincount(np.concatenate([bootstrap_sample(10, rng) for _ in range(10_000)]), minlength=10)
    expected = 10_000
    sigma = np.sqrt(100_000 * 0.1 * 0.9)
    assert np.all(np.abs(counts - expected) <= 3 * sigma)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_substreams_independent_of_order():
    a = [substream(5, t).random() for t in range(4)]
    b = [substream(5, t).random() for t in reversed(range(4))][::-1]
    assert a == b and len(set(a)) == 4


def test_hyperparams_validation():
    assert Hyperparams().resolve_max_features(5) == 3
    assert Hyperparams(max_features=2).resolve_max_features(5) == 2
    assert Hyperparams(max_features=9).resolve_max_features(5) == 5
    for kw in ({"max_trees": 0}, {"max_pairs": 0}, {"max_features": 1.5}, {"max_features": 0}, {"seed": -1}):
        with pytest.raises(ValueError):
            Hyperparams(**kw)
    hp = Hyperparams(7, 0.25, 2, StoppingRule(3, 4, 2), 11)
    assert Hyperparams.from_dict(json.loads(json.dumps(hp.to_dict()))) == hp


def test_fit_deterministic_and_single_tree():
    ds = _margin_data()
    a = dumps_model(fit(ds, Hyperparams(max_trees=5, seed=3)))
    b = dumps_model(fit(ds, Hyperparams(max_trees=5, seed=3)))
    assert a == b
    assert a != dumps_model(fit(ds, Hyperparams(max_trees=5, seed=4)))
    assert len(fit(ds, Hyperparams(max_trees=1)).trees) == 1


def test_workers_do_not_change_model():
    ds = _mixed()
    hp = Hyperparams(max_trees=12, seed=8)
    assert dumps_model(fit(ds, hp, workers=1)) == dumps_model(fit(ds, hp, workers=4))


def test_separable_training_auc():
    ds = _margin_data()
    proba = predict_proba(fit(ds, Hyperparams(max_trees=20)), ds)
    assert auc(proba[:, 1], ds.y) == 1.0


def test_soft_voting_examples():
    meta = [{"name": "x", "kind": "numeric", "measure": "euclidean"}]
    hp = Hyperparams(max_trees=2)
    same = ForestModel(hp, ("a", "b"), meta, [Leaf((3, 0), 0), Leaf((1, 0), 0)])
    np.testing.assert_array_equal(predict_proba(same, [[0.0]]), [[1.0, 0.0]])
    split = ForestModel(hp, ("a", "b"), meta, [Leaf((1, 0), 0), Leaf((0, 1), 0)])
    np.testing.assert_array_equal(predict_proba(split, [[0.0]]), [[0.5, 0.5]])
    assert predict(split, [[0.0]]) == ["a"]
    lean = ForestModel(hp, ("neg", "pos"), meta, [Leaf((4, 1), 0), Leaf((3, 2), 0)])
    assert predict(lean, [[0.0]]) == ["neg"]


def test_predict_agrees_with_argmax():
    ds = _mixed(1)
    model = fit(ds, Hyperparams(max_trees=15, seed=2))
    proba = predict_proba(model, ds)
    assert np.allclose(proba.sum(axis=1), 1, atol=1e-12, rtol=0)
    assert ((proba >= 0) & (proba <= 1)).all()
    assert predict(model, ds) == [model.classes[k] for k in proba.argmax(axis=1)]


def test_cached_and_value_prediction_agree():
    ds = _mixed(2)
    model = fit(ds, Hyperparams(max_trees=10, seed=1), indices=np.arange(30))
    test = np.arange(30, 40)
    cached = predict_proba(model, None, indices=test, training_data=ds)
    direct = predict_proba(model, [ds.row(i) for i in test])
    np.testing.assert_array_equal(cached, direct)


def test_save_load_round_trip(tmp_path):
    ds = _mixed(3)
    model = fit(ds, Hyperparams(max_trees=8, seed=5))
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_array_equal(predict_proba(model, ds), predict_proba(back, ds))
    assert dumps_model(back) == path.read_text()


def test_load_errors(tmp_path):
    model = fit(_margin_data(20), Hyperparams(max_trees=2))
    text = dumps_model(model)
    (tmp_path / "t.json").write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "t.json")
    doc = json.loads(text)
    doc["version"] = 99
    (tmp_path / "v.json").write_text(json.dumps(doc))
    with pytest.raises(ModelVersionError):
        load_model(tmp_path / "v.json")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "missing.json")


def test_model_file_layout():
    doc = json.loads(dumps_model(fit(_mixed(), Hyperparams(max_trees=2))))
    assert set(doc) == {"version", "hyperparams", "classes", "columns", "trees"}
    assert doc["version"] == 1 and doc["classes"] == ["neg", "pos"]


def test_precomputed_scoring_needs_matrix():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(12, 2))
    m = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    ds = Dataset([FeatureColumn("d", "precomputed", range(12), "precomputed", m)], [str(i % 2) for i in range(12)])
    model = fit(ds, Hyperparams(max_trees=3))
    assert predict_proba(model, ds).shape == (12, 2)
    with pytest.raises(ValueError, match="precomputed"):
        predict_proba(model, [ds.row(0)])


def test_similarity_forest_reduction():
    ds = generate(SynthConfig(mode="order", n_examples=40, seed=1, mean_length=6, mean_set_size=4, vocab_size=12))
    calls = []
    model = fit(ds, Hyperparams(max_trees=5, max_features=1, max_pairs=1), observer=lambda j, p, y: calls.append(j))
    internals = [n for t in model.trees for n in iter_nodes(t) if isinstance(n, Internal)]
    assert internals and all(n.split.feature_index == 0 for n in internals)
    # one projection per internal node: one feature, one pair (pair exhaustion can only add leaves)
    assert set(calls) == {0} and len(calls) >= len(internals)


def test_fast_path_gives_identical_forest():
    rng = np.random.default_rng(12)
    ds = numeric_dataset(rng.integers(0, 6, size=(60, 4)), rng.integers(0, 2, 60))
    hp = Hyperparams(max_trees=10, seed=4, max_pairs=2)
    assert dumps_model(fit(ds, hp, fast_numeric=True)) == dumps_model(fit(ds, hp, fast_numeric=False))


@pytest.mark.slow
def test_more_trees_do_not_hurt():
    """Mean held-out AUC with 100 trees is at least that of a single tree."""
    ds = generate(SynthConfig(mode="order", n_examples=120, seed=0, mean_length=10, mean_set_size=5, vocab_size=20))
    rng = np.random.default_rng(0)
    many, one = [], []
    for seed in range(20):
        perm = rng.permutation(ds.n)
        train, test = perm[:80], perm[80:]
        for trees, out in ((100, many), (1, one)):
            model = fit(ds, Hyperparams(max_trees=trees, seed=seed), indices=train)
            out.append(auc(predict_proba(model, None, indices=test, training_data=ds)[:, 1], ds.y[test]))
    assert np.mean(many) >= np.mean(one)
