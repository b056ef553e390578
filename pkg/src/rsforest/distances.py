"""Per-kind distance measures and the ``(kind, name)`` registry.

Every measure is bitwise symmetric (``d(a, b) == d(b, a)`` exactly), which lets
the pairwise cache fill both triangles from one evaluation.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .data import FeatureColumn, Graph, Kind, Ref

IPSEN_GAMMA = 0.08


def _check_finite(*xs):
    for x in xs:
        if not math.isfinite(x):
            raise ValueError(f"non-finite input: {x!r}")


def euclidean_scalar(a: float, b: float) -> float:
    _check_finite(a, b)
    return abs(a - b)


def _as_vectors(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def euclidean_vector(a, b) -> float:
    a, b = _as_vectors(a, b)
    d = a - b
    return float(np.sqrt(np.dot(d, d)))


def cosine_distance(a, b) -> float:
    """``1 - cos(a, b)``; 1 if exactly one vector is zero, 0 if both are."""
    a, b = _as_vectors(a, b)
    sa = float(np.max(np.abs(a))) if a.size else 0.0
    sb = float(np.max(np.abs(b))) if b.size else 0.0
    if sa == 0.0 or sb == 0.0:
        return 0.0 if sa == sb else 1.0
    if np.array_equal(a, b):
        return 0.0
    # the cosine is scale-free; rescaling keeps tiny or huge norms from under/overflowing
    a, b = a / sa, b / sb
    na = float(np.dot(a, a))
    nb = float(np.dot(b, b))
    sim = float(np.dot(a, b)) / math.sqrt(na * nb)
    return min(2.0, max(0.0, 1.0 - sim))


def dtw(a, b) -> float:
    """Unconstrained dynamic time warping with ``|a_i - b_j|`` local cost."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("dtw requires non-empty series")
    return float(_kernels.dtw(a, b))


def set_jaccard(a, b) -> float:
    union = len(a | b)
    if union == 0:
        return 0.0
    return 1.0 - len(a & b) / union


def _encode_setseqs(seqs, vocab: dict | None = None):
    """Bitset-encode sequences of sets over a shared item vocabulary."""
    if vocab is None:
        vocab = {}
        for seq in seqs:
            for s in seq:
                for item in s:
                    vocab.setdefault(item, len(vocab))
    words = max(1, (len(vocab) + 63) // 64)
    out = []
    for seq in seqs:
        bits = np.zeros((len(seq), words), dtype=np.uint64)
        sizes = np.empty(len(seq), dtype=np.int64)
        for i, s in enumerate(seq):
            sizes[i] = len(s)
            for item in s:
                k = vocab[item]
                bits[i, k >> 6] |= np.uint64(1) << np.uint64(k & 63)
        out.append((bits, sizes))
    return out


def _edit_prepared(a, b) -> float:
    return float(_kernels.seqset_edit(a[0], a[1], b[0], b[1]))


def seqset_edit_distance(s, t) -> float:
    """Edit distance between sequences of sets (indel 1, substitution Jaccard)."""
    ea, eb = _encode_setseqs([s, t])
    return _edit_prepared(ea, eb)


def graph_jaccard(g: Graph, h: Graph) -> float:
    return set_jaccard(g.edges, h.edges)


def _degree_histogram(g: Graph) -> dict:
    counts = Counter(g.degrees().tolist())
    return {d: c / g.n for d, c in counts.items()}


def _jsd_prepared(p: dict, q: dict) -> float:
    total = 0.0
    for d in sorted(p.keys() | q.keys()):
        pi = p.get(d, 0.0)
        qi = q.get(d, 0.0)
        m = 0.5 * (pi + qi)
        tp = pi * math.log2(pi / m) if pi > 0 else 0.0
        tq = qi * math.log2(qi / m) if qi > 0 else 0.0
        total += 0.5 * (tp + tq)
    return min(1.0, max(0.0, total))


def degree_divergence(g: Graph, h: Graph) -> float:
    """Base-2 Jensen-Shannon divergence between degree distributions."""
    if g.n == 0 or h.n == 0:
        raise ValueError("degree divergence needs non-empty graphs")
    return _jsd_prepared(_degree_histogram(g), _degree_histogram(h))


def laplacian_modes(g: Graph) -> np.ndarray:
    """Vibrational frequencies ``sqrt(lambda)`` of the Laplacian, trivial mode dropped."""
    if g.n < 2:
        raise ValueError("Ipsen-Mikhailov distance needs graphs with at least 2 nodes")
    eig = np.linalg.eigvalsh(g.laplacian())
    # eigensolver noise around zero would otherwise become modes near 1e-8
    eig[np.abs(eig) < 1e-10] = 0.0
    return np.sqrt(np.abs(eig[1:]))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
IPSEN_MIN_POINTS = 4096


def _gauss_legendre(f, bounds: np.ndarray) -> float:
    """Composite 16-point Gauss-Legendre rule over consecutive ``bounds``."""
    lo, hi = bounds[:-1], bounds[1:]
    half = (hi - lo) / 2
    x = (lo + half)[:, None] + half[:, None] * _GL_NODES
    return float(np.sum(f(x.ravel()).reshape(x.shape) @ _GL_WEIGHTS * half))


def _im_prepared(w1: np.ndarray, w2: np.ndarray, gamma: float = IPSEN_GAMMA, upper: float = math.inf) -> float:
    if np.array_equal(w1, w2) or upper <= 0:
        return 0.0
    k1 = len(w1) * math.pi / 2 + float(np.sum(np.arctan(w1 / gamma)))
    k2 = len(w2) * math.pi / 2 + float(np.sum(np.arctan(w2 / gamma)))
    g2 = gamma * gamma

    def integrand(w):
        rho1 = np.sum(gamma / ((w[:, None] - w1) ** 2 + g2), axis=1) / k1
        rho2 = np.sum(gamma / ((w[:, None] - w2) ** 2 + g2), axis=1) / k2
        # squaring a difference is symmetric in its sign, so d(G, H) == d(H, G)
        return (rho1 - rho2) ** 2

    modes = np.union1d(w1, w2)
    head_end = min(float(modes[-1]) + 10 * gamma, upper)
    # panels break at every mode and are at most gamma/4 wide, so each
    # Lorentzian peak is resolved; at least IPSEN_MIN_POINTS nodes overall
    edges = np.unique(np.concatenate([[0.0], modes[(modes > 0) & (modes < head_end)], [head_end]]))
    width = min(gamma / 4, head_end * len(_GL_NODES) / IPSEN_MIN_POINTS)
    pieces = [np.linspace(a, b, max(1, math.ceil((b - a) / width)) + 1) for a, b in zip(edges[:-1], edges[1:])]
    total = _gauss_legendre(integrand, np.concatenate([pieces[0]] + [p[1:] for p in pieces[1:]]))
    if upper > head_end:
        # tail past the last mode: w = head_end + s / (1 - s), s in [0, 1)
        def tail(s):
            return integrand(head_end + s / (1 - s)) / (1 - s) ** 2

        total += _gauss_legendre(tail, np.linspace(0.0, 1.0, 5))
    return math.sqrt(max(total, 0.0))


def ipsen_mikhailov(g: Graph, h: Graph, gamma: float = IPSEN_GAMMA, upper: float = math.inf) -> float:
    """Ipsen-Mikhailov spectral distance with Lorentzian half-width ``gamma``.

    The spectral density of each graph is normalized to unit mass on
    ``[0, inf)``; the squared difference is integrated over ``[0, upper]``
    with composite Gauss-Legendre quadrature on panels split at every mode,
    plus the mapped tail past the last mode when ``upper`` is infinite.
    """
    return _im_prepared(laplacian_modes(g), laplacian_modes(h), gamma, upper)


@dataclass(frozen=True)
class DistanceMeasure:
    """A named distance over values of one kind.

    ``prepare`` maps a whole column of values to per-value representations
    consumed by ``pair``; it is how expensive per-object work (bitset encoding,
    eigendecompositions) is done once per column instead of once per pair.
    """

    name: str
    kind: Kind
    func: Callable
    prepare: Callable | None = None
    pair: Callable | None = None

    def __call__(self, a, b) -> float:
        return self.func(a, b)

    def bind(self, column: FeatureColumn) -> Callable:
        if self.kind is Kind.PRECOMPUTED:
            matrix = column.matrix
            return lambda a, b: float(matrix[a.index, b.index])
        return self.func


def _precomputed_unbound(a: Ref, b: Ref):
    raise TypeError("precomputed distances need a matrix; use measure.bind(column)")


_MEASURES = [
    DistanceMeasure("euclidean", Kind.NUMERIC, euclidean_scalar),
    DistanceMeasure("euclidean", Kind.TIMESERIES, euclidean_vector,
                    lambda vs: [np.asarray(v) for v in vs], euclidean_vector),
    DistanceMeasure("cosine", Kind.TIMESERIES, cosine_distance,
                    lambda vs: [np.asarray(v) for v in vs], cosine_distance),
    DistanceMeasure("dtw", Kind.TIMESERIES, dtw,
                    lambda vs: [np.asarray(v) for v in vs], lambda a, b: float(_kernels.dtw(a, b))),
    DistanceMeasure("editjaccard", Kind.SETSEQ, seqset_edit_distance, _encode_setseqs, _edit_prepared),
    DistanceMeasure("graphjaccard", Kind.GRAPH, graph_jaccard),
    DistanceMeasure("degreedivergence", Kind.GRAPH, degree_divergence,
                    lambda vs: [_degree_histogram(g) for g in vs], _jsd_prepared),
    DistanceMeasure("ipsenmikhailov", Kind.GRAPH, ipsen_mikhailov,
                    lambda vs: [laplacian_modes(g) for g in vs], _im_prepared),
    DistanceMeasure("precomputed", Kind.PRECOMPUTED, _precomputed_unbound),
]

REGISTRY: dict[tuple[Kind, str], DistanceMeasure] = {(m.kind, m.name): m for m in _MEASURES}


def resolve(kind, name: str) -> DistanceMeasure:
    kind = Kind(kind)
    try:
        return REGISTRY[(kind, name)]
    except KeyError:
        valid = sorted(n for k, n in REGISTRY if k is kind)
        raise KeyError(f"no measure {name!r} for kind {kind.value!r}; valid names: {valid}") from None


class PairwiseCache:
    """Lazily filled distance matrix over one column's examples.

    Entries are pure functions of the two values, so concurrent fills can at
    worst duplicate work; a lock only guards the one-off preparation step.
    """

    def __init__(self, column: FeatureColumn):
        self.column = column
        self.measure = resolve(column.kind, column.measure)
        self._lock = threading.Lock()
        self._prepared = None
        self._matrix = None
        self._refs = None

    def _setup(self):
        with self._lock:
            if self._matrix is not None:
                return
            col = self.column
            if col.kind is not Kind.PRECOMPUTED:
                if self.measure.prepare is not None:
                    self._prepared = self.measure.prepare(col.values)
                else:
                    self._prepared = col.values
            n = len(col)
            m = np.full((n, n), np.nan)
            np.fill_diagonal(m, 0.0)
            self._matrix = m

    def between(self, i: int, js) -> np.ndarray:
        """Distances from example ``i`` to each example in ``js``."""
        col = self.column
        js = np.asarray(js, dtype=np.int64)
        if col.kind is Kind.PRECOMPUTED:
            if self._refs is None:
                self._refs = np.array([v.index for v in col.values], dtype=np.int64)
            return col.matrix[self._refs[i], self._refs[js]]
        if self._matrix is None:
            self._setup()
        row = self._matrix[i]
        out = row[js]
        missing = np.unique(js[np.isnan(out)])
        if missing.size:
            fn = self.measure.pair or self.measure.func
            prep = self._prepared
            a = prep[i]
            for j in missing.tolist():
                d = fn(a, prep[j])
                row[j] = d
                self._matrix[j, i] = d
            out = row[js]
        return out

    def get(self, i: int, j: int) -> float:
        return float(self.between(i, [j])[0])
