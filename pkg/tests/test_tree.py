import numpy as np
import pytest

from conftest import numeric_dataset
from rsforest import Dataset, FeatureColumn, StoppingRule
from rsforest.distances import resolve
from rsforest.synth import SynthConfig, generate
from rsforest.tree import Internal, Leaf, build_tree, iter_nodes, predict_tree, route_batch, tree_depth

FULL = StoppingRule()


def _dists(ds):
    return [resolve(c.kind, c.measure).bind(c) for c in ds.columns]


def _leaves(root):
    return [n for n in iter_nodes(root) if isinstance(n, Leaf)]


def test_pure_node_is_single_leaf():
    ds = numeric_dataset([1, 2, 3, 4], [1, 1, 1, 1])
    root = build_tree(ds, range(4), 1, 1, FULL, np.random.default_rng(0))
    assert root == Leaf((4,), 0)


def test_perfect_split_two_pure_leaves():
    ds = numeric_dataset([1, 2, 3, 4], [0, 0, 1, 1])
    for seed in range(10):
        root = build_tree(ds, range(4), 1, 1, FULL, np.random.default_rng(seed))
        assert isinstance(root, Internal)
        assert root.left.class_counts in ((2, 0), (0, 2)) and root.right.class_counts in ((2, 0), (0, 2))


def test_xor_needs_two_levels():
    ds = numeric_dataset([[0, 0], [0, 1], [1, 0], [1, 1]], [0, 1, 1, 0])
    d = _dists(ds)
    for seed in range(20):
        root = build_tree(ds, range(4), 2, 1, FULL, np.random.default_rng(seed))
        internals = [n for n in iter_nodes(root) if isinstance(n, Internal)]
        assert len(internals) >= 2
        for i in range(4):
            assert predict_tree(root, ds.row(i), d)[ds.y[i]] == 1.0


def test_leaf_proba():
    np.testing.assert_array_equal(Leaf((3, 1), 0).proba(), [0.75, 0.25])


def test_partition_replay_and_purity():
    rng = np.random.default_rng(1)
    ds = numeric_dataset(rng.normal(size=(60, 3)), rng.integers(0, 2, 60))
    boot = rng.integers(0, 60, 60)
    root = build_tree(ds, boot, 2, 1, FULL, np.random.default_rng(2))
    total = np.sum([leaf.class_counts for leaf in _leaves(root)], axis=0)
    np.testing.assert_array_equal(total, np.bincount(ds.y[boot], minlength=2))
    d = _dists(ds)
    # continuous features: every node is splittable, so leaves are pure
    for i in set(boot.tolist()):
        assert predict_tree(root, ds.row(i), d)[ds.y[i]] == 1.0


def test_exemplar_routing_matches_training_placement():
    ds = generate(SynthConfig(mode="order", n_examples=40, seed=3, mean_length=5, mean_set_size=3, vocab_size=10))
    root = build_tree(ds, range(40), 1, 1, FULL, np.random.default_rng(0))
    d = _dists(ds)
    s = root.split
    q_val = ds.columns[0].values[s.q_index]
    proj_q = d[0](s.exemplar_q, q_val) - d[0](s.exemplar_p, q_val)
    assert proj_q == -d[0](s.exemplar_p, s.exemplar_q) < 0
    assert proj_q <= s.threshold


@pytest.mark.parametrize("rule", [StoppingRule(max_depth=2), StoppingRule(min_samples_leaf=5), StoppingRule(min_samples_split=10)])
def test_stopping_rules(rule):
    rng = np.random.default_rng(7)
    ds = numeric_dataset(rng.normal(size=(80, 2)), rng.integers(0, 2, 80))
    root = build_tree(ds, range(80), 2, 1, rule, np.random.default_rng(0))
    if rule.max_depth is not None:
        assert tree_depth(root) <= rule.max_depth
    for leaf in _leaves(root):
        assert sum(leaf.class_counts) >= rule.min_samples_leaf
    d = _dists(ds)
    # every split node had at least min_samples_split examples
    for node in iter_nodes(root):
        if isinstance(node, Internal):
            n = sum(sum(l.class_counts) for l in _leaves(node))
            assert n >= rule.min_samples_split
    assert predict_tree(root, ds.row(0), d).sum() == pytest.approx(1.0)


def test_max_depth_zero_is_root_leaf():
    ds = numeric_dataset([1, 2, 3, 4], [0, 0, 1, 1])
    assert isinstance(build_tree(ds, range(4), 1, 1, StoppingRule(max_depth=0), np.random.default_rng(0)), Leaf)


def test_unsplittable_impure_node_is_leaf():
    ds = numeric_dataset([1, 1, 1, 1], [0, 1, 0, 1])
    assert build_tree(ds, range(4), 1, 1, FULL, np.random.default_rng(0)) == Leaf((2, 2), 0)


def test_invalid_stopping_rules():
    for kw in ({"max_depth": -1}, {"min_samples_split": 1}, {"min_samples_leaf": 0}):
        with pytest.raises(ValueError):
            StoppingRule(**kw)
    with pytest.raises(ValueError):
        build_tree(numeric_dataset([1, 2], [0, 1]), [], 1, 1, FULL, np.random.default_rng(0))


def test_route_batch_matches_single_routing():
    rng = np.random.default_rng(4)
    ds = numeric_dataset(rng.normal(size=(50, 3)), rng.integers(0, 2, 50))
    root = build_tree(ds, rng.integers(0, 50, 50), 2, 1, FULL, np.random.default_rng(5))
    d = _dists(ds)
    X = np.column_stack([c.numeric_array for c in ds.columns])

    def projection(split, rows):
        x = X[rows, split.feature_index]
        return np.abs(split.exemplar_q - x) - np.abs(split.exemplar_p - x)

    batch = route_batch(root, np.arange(50), projection, 2)
    single = np.array([predict_tree(root, ds.row(i), d) for i in range(50)])
    np.testing.assert_array_equal(batch, single)


def test_mixed_kind_tree_predicts_probabilities():
    rng = np.random.default_rng(0)
    series = [tuple(rng.normal(size=5) + (i % 2)) for i in range(30)]
    ds = Dataset(
        [FeatureColumn("t", "timeseries", series, "dtw"), FeatureColumn("x", "numeric", rng.normal(size=30), "euclidean")],
        [str(i % 2) for i in range(30)],
    )
    root = build_tree(ds, range(30), 2, 1, FULL, np.random.default_rng(1))
    d = _dists(ds)
    for i in range(30):
        p = predict_tree(root, ds.row(i), d)
        assert p.min() >= 0 and p.sum() == pytest.approx(1)
