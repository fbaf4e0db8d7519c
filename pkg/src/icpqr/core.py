"""Incomplete pivoted Q-less QR (ICPQR).

Given data ``A`` (points as columns) and a distortion parameter ``mu``, the
fit greedily admits the column whose residual against the span of the
already-admitted columns is largest, and stops once every residual is below
``mu``. The admitted columns form the *dictionary*; the ``s x n`` matrix
``R̄`` of projection coefficients is an ``s``-dimensional embedding whose
pairwise distances differ from the originals by at most ``2 * mu``.

Only inner products between data columns are used; the orthonormal basis
``Q`` is never formed during fitting (see :func:`expand_q` for when it is
wanted).
"""
from dataclasses import dataclass, replace
from typing import Optional
import warnings

import numpy as np
from scipy.linalg import solve_triangular

from .distortion import max_distortion
from .exceptions import BoundViolation, ConditioningWarning, ShapeError, ValidationError
from .extension import extend_columns
from .linalg import (
    RESIDUAL_RTOL,
    _fix_signs,
    as_data_matrix,
    numerical_rank,
    operator_norm,
)


@dataclass(frozen=True)
class IcpqrModel:
    """A fitted ICPQR decomposition.

    Attributes
    ----------
    mu : float
        Effective distortion parameter: every training column has distortion
        rate ``<= mu``. Equals `mu_requested` unless `max_dim` cut the loop
        short, in which case it is the residual actually achieved.
    mu_requested : float
    s : int
        Embedding dimension (dictionary size).
    perm : ndarray of int, shape (n,)
        Pivot permutation; ``perm[:s]`` are the dictionary column indices in
        admission order.
    dictionary : ndarray, shape (m, s)
        The pivot columns ``A[:, perm[:s]]``.
    tri : ndarray, shape (s, s)
        ``R̄[:, perm[:s]]``, upper triangular with positive diagonal.
    embedding : ndarray, shape (s, n) or None
        ``R̄``; column ``i`` embeds training point ``i``. May be dropped to
        save space since extension only needs `dictionary` and `tri`.
    mu_strict : float
        ``max_i`` distortion rate of the training columns.
    m, n : int
        Shape of the training matrix.
    capped : bool
        Whether `max_dim` stopped the loop before the residual test did.
    """

    mu: float
    mu_requested: float
    s: int
    perm: np.ndarray
    dictionary: np.ndarray
    tri: np.ndarray
    embedding: Optional[np.ndarray]
    mu_strict: float
    m: int
    n: int
    capped: bool = False

    @property
    def pivots(self):
        return self.perm[: self.s]

    def without_embedding(self):
        return replace(self, embedding=None)


def _check_mu(mu):
    try:
        mu = float(mu)
    except (TypeError, ValueError):
        raise ValidationError(f"mu must be a number, got {mu!r}") from None
    if not np.isfinite(mu) or mu < 0:
        raise ValidationError(f"mu must be a finite nonnegative number, got {mu}")
    return mu


def fit(A, mu, max_dim=None, keep_embedding=True, rtol=RESIDUAL_RTOL, workers=None):
    """Fit an ICPQR model with distortion parameter `mu`.

    Pivots are admitted while the squared residual of the previously
    admitted pivot is at least ``mu**2``; the first pivot whose residual
    falls below ``mu`` is therefore still admitted, after which every
    remaining residual is below ``mu``. Candidates whose squared residual is
    at or below ``rtol * max_i ||a_i||^2`` count as exact zeros and are never
    admitted. Ties in the pivot choice go to the lowest column index.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Data, one point per column.
    mu : float
        Nonnegative distortion parameter. ``mu=0`` gives a complete pivoted
        QR of the numerical column space.
    max_dim : int, optional
        Budget on the embedding dimension. When it binds, the returned
        model's ``mu`` is the residual actually achieved.
    keep_embedding : bool
        Keep the ``s x n`` embedding on the model.
    rtol : float
        Relative numerical-zero threshold for squared residuals.
    workers : int, optional
        Threads for the in-sample distortion pass (``ICPQR_THREADS``).

    Returns
    -------
    IcpqrModel
    """
    A = as_data_matrix(A)
    mu = _check_mu(mu)
    m, n = A.shape
    cap = min(m, n)
    if max_dim is not None:
        if int(max_dim) != max_dim or not 0 <= max_dim <= cap:
            raise ValidationError(f"max_dim must be an integer in [0, {cap}], got {max_dim}")
        cap = int(max_dim)

    z = np.einsum("ij,ij->j", A, A)
    tol = rtol * float(z.max())
    y = np.zeros(n)
    picked = np.zeros(n, dtype=bool)
    perm = np.arange(n)
    where = np.arange(n)
    Rbar = np.zeros((max(1, min(cap, 64)), n))
    mu2 = mu * mu
    s = 0
    capped = False
    delta = np.inf
    # delta is the squared residual of the pivot admitted last, so the pivot
    # that first drops below mu**2 is still admitted before the loop exits
    while delta >= mu2:
        if s == n:
            break
        res = z - y
        res[picked] = -np.inf
        i = int(np.argmax(res))
        cand = max(float(res[i]), 0.0)
        if cand <= tol:
            break
        if s == cap:
            capped = True
            break
        if s == Rbar.shape[0]:
            Rbar = np.concatenate([Rbar, np.zeros((min(Rbar.shape[0], cap - s), n))])
        delta = cand
        r = np.sqrt(delta)
        u = A[:, i] @ A
        if s:
            u -= Rbar[:s, i] @ Rbar[:s]
        row = Rbar[s]
        np.divide(u, r, out=row)
        row[picked] = 0.0
        row[i] = r
        picked[i] = True
        y += row * row
        p, c = where[i], perm[s]
        perm[s], perm[p] = i, c
        where[i], where[c] = s, p
        s += 1

    Rbar = np.ascontiguousarray(Rbar[:s])
    pivots = perm[:s]
    dictionary = np.ascontiguousarray(A[:, pivots])
    tri = np.ascontiguousarray(Rbar[:, pivots])
    _, dist = extend_columns(dictionary, tri, A, workers=workers)
    mu_strict = float(dist.max())
    return IcpqrModel(
        mu=max(mu, mu_strict),
        mu_requested=mu,
        s=s,
        perm=perm,
        dictionary=dictionary,
        tri=tri,
        embedding=Rbar if keep_embedding else None,
        mu_strict=mu_strict,
        m=m,
        n=n,
        capped=capped,
    )


def embed(model):
    """The stored ``s x n`` embedding (column ``i`` embeds training point ``i``)."""
    if model.embedding is None:
        raise ValidationError("model was stored without its embedding; use extend_many on the data")
    return model.embedding


def expand_q(model):
    """Orthonormal basis ``Q = dictionary @ tri^{-1}`` of the dictionary span.

    Emits :class:`ConditioningWarning` when the diagonal of `tri` spans more
    than twelve orders of magnitude, since ``Q`` then loses orthogonality.
    """
    if model.s == 0:
        return np.zeros((model.m, 0))
    diag = np.diag(model.tri)
    if np.any(diag <= 0):
        raise ValidationError("triangular core must have a positive diagonal")
    if diag.max() / diag.min() > 1e12:
        warnings.warn(
            f"triangular core diagonal ratio {diag.max() / diag.min():.2e} exceeds 1e12",
            ConditioningWarning,
            stacklevel=2,
        )
    return solve_triangular(model.tri, model.dictionary.T, trans="T", lower=False).T


def _embedding_or_extend(model, A):
    if model.embedding is not None:
        return model.embedding
    coords, _ = extend_columns(model.dictionary, model.tri, A)
    return coords


def approximation_error(model, A, check=False):
    """Frobenius error of the rank-``s`` approximation ``Q R̄`` of `A`.

    Returns ``(error, bound)`` with ``bound = mu * sqrt(rho - s)`` and ``rho``
    the numerical rank of `A`. Note that ``mu * sqrt(n - s)`` is the bound
    that holds unconditionally (each of the ``n - s`` non-pivot columns has
    residual below ``mu``); the ``rho - s`` form can fail when ``n > rho``.
    With ``check=True`` a violation of ``bound + 1e-8`` raises
    :class:`BoundViolation`.
    """
    A = as_data_matrix(A)
    if A.shape != (model.m, model.n):
        raise ShapeError(f"A has shape {A.shape}, model was fitted on {(model.m, model.n)}")
    Q = expand_q(model)
    E = A - Q @ _embedding_or_extend(model, A)
    err = float(np.linalg.norm(E))
    rho = numerical_rank(A)
    bound = model.mu * np.sqrt(max(rho - model.s, 0))
    if check and err > bound + 1e-8:
        raise BoundViolation(f"approximation error {err:.6g} exceeds mu*sqrt(rho-s) = {bound:.6g}")
    return err, float(bound)


def align_optimal_coords(model):
    """Rotate the embedding onto its principal axes.

    With ``R̄ = U S V^T``, returns ``(U^T R̄, U^T)``. Pairwise distances are
    unchanged; the (uncentered) mean square of the coordinates is
    non-increasing along the axes.
    """
    R = embed(model)
    if model.s == 0:
        return R.copy(), np.zeros((0, 0))
    U, _, Vt = np.linalg.svd(R, full_matrices=False)
    U, _ = _fix_signs(U, Vt.T)
    rotation = U.T
    return rotation @ R, rotation


def noise_stability_check(A, N, mu, **fit_kwargs):
    """Fit on ``A + N`` and measure the distortion against the clean geometry.

    Returns ``(distortion, bound)`` with ``bound = 2 (mu + ||N||_2)``; raises
    :class:`BoundViolation` if the distortion exceeds ``bound + 1e-8``.
    """
    A = as_data_matrix(A)
    N = as_data_matrix(N, "N")
    if A.shape != N.shape:
        raise ShapeError(f"A has shape {A.shape} but N has shape {N.shape}")
    model = fit(A + N, mu, **fit_kwargs)
    eta = operator_norm(N)
    dist = max_distortion(A, embed(model))
    bound = 2.0 * (model.mu + eta)
    if dist > bound + 1e-8:
        raise BoundViolation(f"clean-geometry distortion {dist:.6g} exceeds 2(mu+eta) = {bound:.6g}")
    return dist, bound
