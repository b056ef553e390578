"""Compiled dynamic-programming and split-scan kernels."""

import numba
import numpy as np

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@numba.njit(cache=True)
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


@numba.njit(cache=True)
def seqset_edit(a_bits, a_sizes, b_bits, b_sizes):
    """Edit distance over two bitset-encoded sequences of sets.

    ``*_bits`` has shape (length, words); ``*_sizes`` holds set cardinalities.
    Insert/delete cost 1, substitution cost is the Jaccard distance.
    """
    n = a_bits.shape[0]
    m = b_bits.shape[0]
    words = a_bits.shape[1]
    prev = np.empty(m + 1)
    cur = np.empty(m + 1)
    for j in range(m + 1):
        prev[j] = j
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            inter = 0
            for w in range(words):
                inter += _popcount(a_bits[i - 1, w] & b_bits[j - 1, w])
            union = a_sizes[i - 1] + b_sizes[j - 1] - inter
            if union == 0:
                sub = 0.0
            else:
                sub = 1.0 - inter / union
            best = prev[j - 1] + sub
            if prev[j] + 1.0 < best:
                best = prev[j] + 1.0
            if cur[j - 1] + 1.0 < best:
                best = cur[j - 1] + 1.0
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


@numba.njit(cache=True)
def dtw(a, b):
    n = a.shape[0]
    m = b.shape[0]
    prev = np.full(m + 1, np.inf)
    cur = np.empty(m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = np.inf
        for j in range(1, m + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(a[i - 1] - b[j - 1]) + best
        prev, cur = cur, prev
    return prev[m]


@numba.njit(cache=True)
def scan_thresholds(sorted_proj, sorted_labels):
    """Best "<= thr" split over a projection already sorted ascending.

    Returns (position, impurity, balance); position -1 when the projection
    has a single unique value. Impurity is formed as one division of exact
    integers, so equal rationals compare equal.
    """
    n = sorted_proj.shape[0]
    total1 = 0
    for i in range(n):
        total1 += sorted_labels[i]
    total0 = n - total1
    best_pos = -1
    best_g = np.inf
    best_bal = n + 1
    l1 = 0
    for k in range(n - 1):
        l1 += sorted_labels[k]
        if sorted_proj[k] == sorted_proj[k + 1]:
            continue
        nl = k + 1
        nr = n - nl
        l0 = nl - l1
        r1 = total1 - l1
        r0 = total0 - l0
        sq_l = l0 * l0 + l1 * l1
        sq_r = r0 * r0 + r1 * r1
        den = n * nl * nr
        g = (den - sq_l * nr - sq_r * nl) / den
        bal = abs(nl - nr)
        if g < best_g or (g == best_g and bal < best_bal):
            best_g = g
            best_bal = bal
            best_pos = k
    return best_pos, best_g, best_bal


@numba.njit(cache=True)
def sample_variance(x):
    n = x.shape[0]
    if n < 2:
        return 0.0
    mean = 0.0
    for i in range(n):
        mean += x[i]
    mean /= n
    ss = 0.0
    for i in range(n):
        d = x[i] - mean
        ss += d * d
    return ss / (n - 1)


@numba.njit(cache=True)
def numeric_projection(x, vp, vq):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = abs(vq - x[i]) - abs(vp - x[i])
    return out


@numba.njit(cache=True)
def numeric_split(x, labels, vp, vq):
    """Projection onto scalar exemplars ``(vp, vq)`` followed by the threshold scan."""
    proj = numeric_projection(x, vp, vq)
    order = np.argsort(proj)
    pos, g, bal = scan_thresholds(proj[order], labels[order])
    thr = proj[order[pos]] if pos >= 0 else np.nan
    return thr, g, bal
