"""Repeated stratified cross-validation scored by AUC."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .data import Dataset
from .forest import Hyperparams, derive_seed, fit, predict_proba, substream


def auc(scores, labels) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic (ties count 1/2)."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    pos = y == 1
    n1 = int(pos.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs at least one example of each class")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2
    return float(u / (n1 * n0))


def stratified_kfold(labels, k: int, rng) -> list[np.ndarray]:
    """Partition example indices into ``k`` folds with per-class counts within 1.

    Each class is shuffled and dealt round-robin; the dealing position carries
    over between classes so fold sizes also stay within 1 of each other.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    folds: list[list[int]] = [[] for _ in range(k)]
    start = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < k:
            raise ValueError(f"class {c!r} has {members.size} examples, fewer than k={k}")
        members = rng.permutation(members)
        for pos, i in enumerate(members.tolist()):
            folds[(start + pos) % k].append(i)
        start = (start + members.size) % k
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


@dataclass
class EvalReport:
    fold_auc: list  # [repetition][fold]
    test_indices: list = field(repr=False)  # [repetition][fold] -> list of row ids
    hyperparams: dict = field(default_factory=dict)
    reps: int = 0
    folds: int = 0
    seed: int = 0
    positive_class: str = ""
    dataset: str = ""

    @property
    def values(self) -> np.ndarray:
        return np.array(self.fold_auc, dtype=float).ravel()

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values, ddof=1)) if self.values.size > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "positive_class": self.positive_class,
            "reps": self.reps,
            "folds": self.folds,
            "seed": self.seed,
            "hyperparams": self.hyperparams,
            "fold_auc": self.fold_auc,
            "mean_auc": self.mean,
            "std_auc": self.std,
            "test_indices": self.test_indices,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def repeated_cv(
    ds: Dataset,
    hp: Hyperparams | None = None,
    reps: int = 10,
    k: int = 2,
    seed: int = 0,
    *,
    workers: int = 1,
    fast_numeric: bool = True,
    observer=None,
) -> EvalReport:
    """``reps`` x stratified ``k``-fold CV of the forest, AUC per held-out fold.

    Folds of repetition ``r`` come from ``substream(seed, r)``; the forest for
    fold ``f`` is seeded from ``(seed, r, f)``. The positive class is the
    larger class value. Distances are cached on ``ds`` and reused across
    folds; they depend only on feature values, never on labels.
    """
    hp = hp or Hyperparams()
    if reps < 1:
        raise ValueError("reps must be >= 1")
    y = ds.y
    fold_auc, tests = [], []
    for r in range(reps):
        folds = stratified_kfold(y, k, substream(seed, r))
        rep_auc, rep_tests = [], []
        for f, test in enumerate(folds):
            train = np.setdiff1d(np.arange(ds.n), test)
            fold_hp = Hyperparams(hp.max_trees, hp.max_features, hp.max_pairs, hp.stopping, derive_seed(seed, r, f))
            model = fit(ds, fold_hp, indices=train, workers=workers, fast_numeric=fast_numeric, observer=observer)
            proba = predict_proba(model, None, indices=test, training_data=ds)
            rep_auc.append(auc(proba[:, 1], y[test]))
            rep_tests.append(test.tolist())
        fold_auc.append(rep_auc)
        tests.append(rep_tests)
    return EvalReport(
        fold_auc, tests, hp.to_dict(), reps, k, seed,
        positive_class=ds.class_values[1], dataset=ds.name,
    )


def render_report(report: EvalReport) -> str:
    """Fixed-width one-row summary table of a CV report."""
    if report.values.size == 0:
        raise ValueError("empty report")
    hp = report.hyperparams
    config = f"T={hp.get('max_trees')} mf={hp.get('max_features')} mp={hp.get('max_pairs')} {report.reps}x{report.folds}CV"
    header = f"{'dataset':<16} {'config':<32} {'AUC (mean ± std)':>18} {'folds':>6}"
    row = f"{report.dataset:<16} {config:<32} {report.mean:>9.2f} ± {report.std:<6.2f} {report.values.size:>6d}"
    return header + "\n" + "-" * len(header) + "\n" + row + "\n"
