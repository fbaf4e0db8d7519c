"""Dense linear-algebra helpers.

Everything here follows the columns-are-points convention: an ``(m, n)``
array holds ``n`` points of dimension ``m``.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError, ValidationError

# Squared residuals at or below RESIDUAL_RTOL * max_i ||a_i||^2 are treated as
# exact zeros by both pivoted QR variants; keeps z - y cancellation noise out.
RESIDUAL_RTOL = 1e-12


def as_data_matrix(A, name="A"):
    """Return `A` as a finite float64 ``(m, n)`` array with ``m, n >= 1``."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} contains non-finite entries")
    return A


def as_vector(x, length=None, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {x.shape}")
    if length is not None and x.shape[0] != length:
        raise ShapeError(f"{name} has length {x.shape[0]}, expected {length}")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{name} contains non-finite entries")
    return x


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``A = U @ diag(S) @ V.T`` truncated to the numerical rank.

    Attributes
    ----------
    U : ndarray, shape (m, r)
    S : ndarray, shape (r,)
        Non-increasing, nonnegative.
    V : ndarray, shape (n, r)
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank(self):
        return self.S.shape[0]

    def reconstruct(self):
        return (self.U * self.S) @ self.V.T


def _fix_signs(U, V):
    # largest-magnitude entry of every left singular vector made nonnegative
    if U.shape[1] == 0:
        return U, V
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def thin_svd(A, k=None, rtol=1e-12):
    """Thin SVD truncated to ``min(k, numerical rank)`` components.

    Singular values below ``rtol * s_1`` count as zero. Singular vectors are
    sign-normalized so that the largest-magnitude entry of every left
    singular vector is nonnegative, which makes results reproducible.

    Parameters
    ----------
    A : array_like, shape (m, n)
    k : int, optional
        Rank cap; ``None`` keeps the full numerical rank.
    rtol : float
        Relative singular-value threshold.

    Returns
    -------
    SvdResult
    """
    A = as_data_matrix(A)
    m, n = A.shape
    if k is not None and not 0 <= k <= min(m, n):
        raise ValidationError(f"rank cap k={k} outside [0, {min(m, n)}]")
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(S > rtol * S[0])) if S.size and S[0] > 0 else 0
    if k is not None:
        r = min(r, k)
    U, V = _fix_signs(U[:, :r], Vt[:r].T)
    return SvdResult(U=np.ascontiguousarray(U), S=S[:r].copy(), V=np.ascontiguousarray(V))


def numerical_rank(A, rtol=1e-12):
    return thin_svd(A, rtol=rtol).rank


def operator_norm(A):
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def full_left_singular_vectors(A):
    """Square orthogonal ``U`` (m x m) with the package sign convention.

    Also returns the singular values and the matching right singular vectors
    (thin), which callers use to disambiguate signs between two matrices.
    """
    A = as_data_matrix(A)
    U, S, Vt = np.linalg.svd(A, full_matrices=True)
    r = S.shape[0]
    Ur, V = _fix_signs(U[:, :r], Vt[:r].T)
    U = np.concatenate([Ur, U[:, r:]], axis=1)
    return U, S, V


def modified_gram_schmidt(V, reorthogonalize=True):
    """Orthonormalize the columns of `V` in order (MGS, optionally twice).

    Raises if a column is numerically dependent on its predecessors; callers
    pass linearly independent columns only.
    """
    V = as_data_matrix(V, "V")
    m, k = V.shape
    Q = np.zeros((m, k))
    for j in range(k):
        w = V[:, j].copy()
        for _ in range(2 if reorthogonalize else 1):
            for i in range(j):
                w -= (Q[:, i] @ w) * Q[:, i]
        nrm = np.linalg.norm(w)
        if nrm <= 1e-14 * max(np.linalg.norm(V[:, j]), 1.0):
            raise ValidationError(f"column {j} is linearly dependent on earlier columns")
        Q[:, j] = w / nrm
    return Q


def reference_pivoted_qr(A, mu, max_dim=None, rtol=RESIDUAL_RTOL):
    """Incomplete pivoted QR that carries ``Q`` explicitly.

    Greedy column pivoting on the residual norm ``||(I - Q Q^T) a_i||``. The
    loop continues while the squared residual of the last admitted pivot is
    ``>= mu**2``; candidates at the numerical-zero threshold are never
    admitted. Residuals are updated by projecting out each
    new direction twice, so this routine is slow but accurate, and serves as a
    cross-check for the Q-less recursion in :func:`icpqr.fit`.

    Returns
    -------
    Q : ndarray, shape (m, s)
        Orthonormal columns.
    R : ndarray, shape (s, n)
        Upper trapezoidal in pivot order: ``A[:, perm] ~= Q @ R``.
    perm : ndarray of int, shape (n,)
        ``perm[:s]`` are the pivot columns in admission order.
    """
    A = as_data_matrix(A)
    mu = float(mu)
    if not np.isfinite(mu) or mu < 0:
        raise ValidationError(f"mu must be a finite nonnegative number, got {mu}")
    m, n = A.shape
    cap = min(m, n) if max_dim is None else min(int(max_dim), m, n)
    W = A.copy()
    zmax = float(np.max(np.einsum("ij,ij->j", A, A)))
    tol = rtol * zmax
    perm = np.arange(n)
    where = np.arange(n)  # where[c] = position of column c inside perm
    picked = np.zeros(n, dtype=bool)
    Q = np.zeros((m, cap))
    Rbar = np.zeros((cap, n))
    s = 0
    delta = np.inf
    while delta >= mu * mu and s < min(cap, n):
        res = np.einsum("ij,ij->j", W, W)
        res[picked] = -np.inf
        i = int(np.argmax(res))
        delta = max(float(res[i]), 0.0)
        if delta <= tol:
            break
        q = W[:, i] / np.sqrt(delta)
        for _ in range(2):
            q -= Q[:, :s] @ (Q[:, :s].T @ q)
            q /= np.linalg.norm(q)
        Q[:, s] = q
        Rbar[s] = q @ A
        Rbar[s, picked] = 0.0
        W -= np.outer(q, q @ W)
        W[:, i] = 0.0
        # swap positions s and where[i] inside perm
        p = where[i]
        c = perm[s]
        perm[s], perm[p] = i, c
        where[i], where[c] = s, p
        picked[i] = True
        s += 1
    return Q[:, :s].copy(), Rbar[:s][:, perm].copy(), perm
