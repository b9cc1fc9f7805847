"""Independent oracles used to freeze expected values.

These deliberately avoid the production code paths they check: brute force
enumeration instead of branch and bound, dense matrix arithmetic instead
of packed words.
"""
from __future__ import annotations

import itertools

import numpy as np


def brute_force_min_weight(h: np.ndarray, l: np.ndarray, wmax: int = 8) -> int | None:
    """Smallest |e| with He = 0 and Le != 0, by exhaustive enumeration."""
    h = np.asarray(h, dtype=np.uint8)
    l = np.asarray(l, dtype=np.uint8)
    n = h.shape[1]
    for w in range(1, min(n, wmax) + 1):
        for combo in itertools.combinations(range(n), w):
            e = np.zeros(n, dtype=np.uint8)
            e[list(combo)] = 1
            if not (h @ e % 2).any() and (l @ e % 2).any():
                return w
    return None


def dense_rank(a: np.ndarray) -> int:
    a = (np.asarray(a, dtype=np.uint8) & 1).copy()
    if a.size == 0:
        return 0
    m, n = a.shape
    r = 0
    for c in range(n):
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        a[[r, p]] = a[[p, r]]
        for i in range(m):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
        if r == m:
            break
    return r


def dense_ambiguous(h: np.ndarray, l: np.ndarray) -> bool:
    rk = dense_rank(h)
    return any(
        l[i].any() and dense_rank(np.vstack([h, l[i : i + 1]])) > rk
        for i in range(l.shape[0])
    )
