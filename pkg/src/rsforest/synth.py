"""Synthetic sequences-of-sets benchmarks (``items``, ``lengths``, ``order``).

All three modes share one recipe: a sequence length drawn from
Poisson(mean_length), set sizes from Poisson(mean_set_size), and items drawn
without replacement from a categorical distribution over the vocabulary. The
classes differ only in the one aspect the mode is named after:

items    class 1 uses a different permutation of the same Zipf weights
lengths  class 1 has its mean length raised by ``length_offset``
order    class 1 sequences are sorted by each set's smallest item id
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureColumn, Kind

MODES = ("items", "lengths", "order")


@dataclass(frozen=True)
class SynthConfig:
    mode: str = "order"
    n_examples: int = 400
    vocab_size: int = 50
    mean_length: int = 20
    mean_set_size: int = 20
    seed: int = 0
    zipf_exponent: float = 0.2
    length_offset: float = 0.4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_examples < 2 or self.n_examples % 2:
            raise ValueError("n_examples must be even and >= 2 (balanced classes)")
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        if self.mean_length < 1 or self.mean_set_size < 1:
            raise ValueError("mean_length and mean_set_size must be >= 1")
        if self.mode == "items" and self.vocab_size < 2 * self.mean_set_size:
            raise ValueError("mode 'items' needs vocab_size >= 2 * mean_set_size")
        if self.zipf_exponent < 0 or self.length_offset < 0:
            raise ValueError("zipf_exponent and length_offset must be non-negative")


def item_names(vocab_size: int) -> list[str]:
    """Zero-padded ids, so string order matches numeric order."""
    width = len(str(vocab_size - 1))
    return [f"i{k:0{width}d}" for k in range(vocab_size)]


def generate(cfg: SynthConfig) -> Dataset:
    """Balanced two-class dataset with one set-sequence column (edit/Jaccard distance)."""
    rng = np.random.default_rng(cfg.seed)
    names = item_names(cfg.vocab_size)
    base = 1.0 / np.arange(1, cfg.vocab_size + 1) ** cfg.zipf_exponent
    base /= base.sum()
    weights = [base[rng.permutation(cfg.vocab_size)]]
    weights.append(base[rng.permutation(cfg.vocab_size)] if cfg.mode == "items" else weights[0])
    mean_len = [cfg.mean_length, cfg.mean_length * (1 + cfg.length_offset) if cfg.mode == "lengths" else cfg.mean_length]

    seqs, labels = [], []
    for k in range(cfg.n_examples):
        c = k % 2
        length = max(1, int(rng.poisson(mean_len[c])))
        sets = []
        for _ in range(length):
            size = min(max(1, int(rng.poisson(cfg.mean_set_size))), cfg.vocab_size)
            sets.append(np.sort(rng.choice(cfg.vocab_size, size=size, replace=False, p=weights[c])))
        if cfg.mode == "order" and c == 1:
            sets.sort(key=lambda s: s[0])
        seqs.append(tuple(frozenset(names[i] for i in s) for s in sets))
        labels.append(str(c))
    column = FeatureColumn("sequence", Kind.SETSEQ, seqs, "editjaccard")
    return Dataset([column], labels, name=f"{cfg.mode}")


def bag_of_items(ds: Dataset, column: int = 0, vocabulary=None) -> Dataset:
    """Replace a set-sequence column by per-item occurrence counts.

    One numeric (euclidean) column per vocabulary item; the vocabulary
    defaults to every item seen in the column, in sorted order.
    """
    col = ds.columns[column]
    if col.kind is not Kind.SETSEQ:
        raise ValueError(f"column {col.name!r} is {col.kind.value}, expected setseq")
    if vocabulary is None:
        vocabulary = sorted({item for seq in col.values for s in seq for item in s})
    index = {item: i for i, item in enumerate(vocabulary)}
    counts = np.zeros((ds.n, len(vocabulary)))
    for r, seq in enumerate(col.values):
        for s in seq:
            for item in s:
                counts[r, index[item]] += 1
    new = [
        FeatureColumn(f"{col.name}[{item}]", Kind.NUMERIC, counts[:, i], "euclidean")
        for i, item in enumerate(vocabulary)
    ]
    columns = list(ds.columns[:column]) + new + list(ds.columns[column + 1:])
    return Dataset(columns, ds.labels, name=f"{ds.name}-bag")
