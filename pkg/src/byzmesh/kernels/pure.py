"""Pure-NumPy aggregation kernels.

Fallback backend used when the compiled extension is unavailable (or
when ``BYZMESH_PURE=1``).  Loop and accumulation order deliberately
mirror the compiled kernels so both backends produce identical results:
weighted sums accumulate row by row in input order, medians sort then
take the midpoint, and discard loops break ties toward the lowest index.
"""
from __future__ import annotations

import numpy as np


def weighted_sum(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Row-sequential weighted sum (accumulation order is part of the
    kernel contract: the isolation attack replays it exactly)."""
    acc = np.zeros(x.shape[1])
    for i in range(x.shape[0]):
        acc += w[i] * x[i]
    return acc


def coomed(x: np.ndarray) -> np.ndarray:
    s = np.sort(x, axis=0)
    n = x.shape[0]
    return 0.5 * (s[(n - 1) // 2] + s[n // 2])


def trimean(x: np.ndarray, q: int) -> np.ndarray:
    s = np.sort(x, axis=0)
    n = x.shape[0]
    acc = np.zeros(x.shape[1])
    for i in range(q, n - q):
        acc += s[i]
    return acc / float(n - 2 * q)


def _sq_dist(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(np.dot(d, d))


def ios_aggregate(w: np.ndarray, x: np.ndarray, self_idx: int, q: int) -> np.ndarray:
    trusted = list(range(x.shape[0]))
    for _ in range(q):
        mass = 0.0
        for i in trusted:
            mass += w[i]
        avg = np.zeros(x.shape[1])
        for i in trusted:
            avg += w[i] * x[i]
        avg /= mass
        worst = -1
        worst_dist = -1.0
        for i in trusted:
            if i == self_idx:
                continue
            d = _sq_dist(x[i], avg)
            if d > worst_dist:  # strict: first max wins, lowest index on ties
                worst_dist = d
                worst = i
        trusted.remove(worst)
    mass = 0.0
    for i in trusted:
        mass += w[i]
    out = np.zeros(x.shape[1])
    for i in trusted:
        out += w[i] * x[i]
    return out / mass


def krum_select(x: np.ndarray, q: int) -> int:
    n = x.shape[0]
    keep = n - q - 2
    dists = np.empty((n, n))
    for i in range(n):
        dists[i, i] = 0.0
        for j in range(i + 1, n):
            d = _sq_dist(x[i], x[j])
            dists[i, j] = d
            dists[j, i] = d
    best = -1
    best_score = np.inf
    for i in range(n):
        others = np.sort(np.delete(dists[i], i))
        score = 0.0
        for k in range(keep):
            score += others[k]
        if score < best_score:  # strict: lowest index wins ties
            best_score = score
            best = i
    return best
