"""Brute-force distortion measurements between two embeddings of the same points."""
import numpy as np
from scipy.spatial.distance import pdist


def max_distortion(X, Y):
    """``max_{i<j} | ||x_i - x_j|| - ||y_i - y_j|| |`` over all pairs of columns.

    `X` and `Y` hold the same ``n`` points as columns, possibly in different
    dimensions. Distances are formed from explicit differences, not from Gram
    matrices, so tiny distances keep full relative accuracy.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"point counts differ: {X.shape[1]} vs {Y.shape[1]}")
    if X.shape[1] < 2:
        return 0.0
    return float(np.max(np.abs(_pdist(X) - _pdist(Y))))


def _pdist(X):
    if X.shape[0] == 0:
        return np.zeros(X.shape[1] * (X.shape[1] - 1) // 2)
    return pdist(X.T)


def sampled_max_distortion(X, Y, n_pairs=1_000_000, seed=0):
    """Distortion over a seeded random sample of pairs.

    A value under a bound is only a necessary condition for the bound to hold
    on all pairs.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n = X.shape[1]
    if n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=n_pairs)
    j = rng.integers(0, n, size=n_pairs)
    out = 0.0
    # keep each difference block near 2e7 entries
    step = max(1, min(100_000, 20_000_000 // max(X.shape[0], Y.shape[0], 1)))
    for lo in range(0, n_pairs, step):
        a, b = i[lo:lo + step], j[lo:lo + step]
        dx = np.linalg.norm(X[:, a] - X[:, b], axis=0)
        dy = np.linalg.norm(Y[:, a] - Y[:, b], axis=0)
        out = max(out, float(np.max(np.abs(dx - dy))))
    return out


def verify_distortion(X, Y, exact_limit=2000, n_pairs=1_000_000, seed=0):
    """Return ``(distortion, sampled)``; all pairs when ``n <= exact_limit``."""
    n = np.shape(X)[1]
    if n <= exact_limit:
        return max_distortion(X, Y), False
    return sampled_max_distortion(X, Y, n_pairs=n_pairs, seed=seed), True
