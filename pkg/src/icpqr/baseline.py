"""PCA baseline: truncated left singular projection."""
import numpy as np

from .exceptions import ValidationError
from .linalg import as_data_matrix


def pca_embed(A, k):
    """Project the columns of `A` onto the top-`k` left singular vectors.

    No centring is applied. Returns ``(U_k^T A, 2 * s_{k+1})``, the second
    entry being the distortion bound of the truncation (``s_{k+1} = 0`` when
    ``k`` reaches the numerical rank).
    """
    A = as_data_matrix(A)
    U, S, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(S > 1e-12 * S[0])) if S[0] > 0 else 0
    if int(k) != k or not 0 <= k <= rank:
        raise ValidationError(f"k must be an integer in [0, {rank}], got {k}")
    k = int(k)
    nxt = float(S[k]) if k < rank else 0.0
    return U[:, :k].T @ A, 2.0 * nxt


def pca_dimension_for(A, target, measure):
    """Smallest ``k`` whose PCA embedding has measured distortion ``<= target``.

    `measure(X, Y)` returns the distortion between the original columns and an
    embedding. Bisection, since the truncation distortion is non-increasing
    in ``k`` up to roundoff; the final ``k`` is always re-measured.
    """
    A = as_data_matrix(A)
    U, S, _ = np.linalg.svd(A, full_matrices=False)
    proj = U.T @ A
    lo, hi = 0, proj.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if measure(A, proj[:mid]) <= target:
            hi = mid
        else:
            lo = mid + 1
    return lo, float(measure(A, proj[:lo]))
