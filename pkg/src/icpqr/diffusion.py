"""Diffusion maps accelerated by ICPQR.

The diffusion geometry of a kernel graph at time ``t`` is realised exactly by
the Euclidean geometry of the columns of

    G = ||d||_1^{1/2} D^{-1/2} (P^T)^t,      P = D^{-1} K,

so fitting ICPQR on ``G`` yields an ``s``-dimensional embedding of the
diffusion distances with distortion at most ``2 mu``, plus a dictionary that
extends to new points through their transition-probability vectors.

A dense eigendecomposition (:func:`classical_dm`) is kept as a reference
implementation for validation on small graphs.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh
from scipy.spatial.distance import cdist, pdist, squareform

from . import core
from .exceptions import ConnectivityError, NumericalIntegrityError, ShapeError, ValidationError
from .extension import ExtensionReport, _report, extend_columns
from .linalg import as_data_matrix, as_vector


@dataclass(frozen=True)
class DiffusionModel:
    """ICPQR fitted on the diffusion matrix ``G`` of a training set.

    Attributes
    ----------
    epsilon : float or None
        Gaussian kernel scale; ``None`` when the model was fitted from a
        user-supplied kernel matrix.
    t : int
        Diffusion time.
    degrees : ndarray, shape (n,)
    train : ndarray, shape (m, n) or None
        Training points, needed to evaluate kernel affinities of new points.
    icpqr : IcpqrModel
        Model fitted on the columns of ``G``.
    mu_strict_t : float
        ``max_i ||G_i - proj(G_i)||``.
    far_threshold : float
        New points whose total kernel mass against the training set falls
        below this value are flagged far and classified abnormal without
        extension.
    """

    epsilon: Optional[float]
    t: int
    degrees: np.ndarray
    train: Optional[np.ndarray]
    icpqr: core.IcpqrModel
    mu_strict_t: float
    far_threshold: float

    @property
    def n(self):
        return self.degrees.shape[0]

    @property
    def degrees_l1(self):
        return float(np.sum(self.degrees))

    @property
    def s(self):
        return self.icpqr.s

    @property
    def mu(self):
        return self.icpqr.mu


@dataclass(frozen=True)
class ClassicalDm:
    """Dense diffusion map.

    Attributes
    ----------
    eigenvalues : ndarray, shape (n,)
        Eigenvalues of ``M = D^{-1/2} K D^{-1/2}`` sorted by decreasing
        modulus.
    psi : ndarray, shape (n, n)
        Column ``i`` holds the diffusion coordinates of point ``i``.
    c : float
        ``max_i dhat_i^{-1/2}`` with ``dhat = d / ||d||_1``.
    t : int
    """

    eigenvalues: np.ndarray
    psi: np.ndarray
    c: float
    t: int

    def analytic_bound(self, k):
        """Distortion bound ``sqrt(2) c |s_{k+1}|^t`` for the first `k` coordinates."""
        n = self.eigenvalues.shape[0]
        if k >= n:
            return 0.0
        return float(np.sqrt(2.0) * self.c * abs(self.eigenvalues[k]) ** self.t)

    def truncate(self, k):
        return self.psi[:k]


def _check_epsilon(epsilon):
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    return epsilon


def _check_t(t):
    if int(t) != t or t < 1:
        raise ValidationError(f"diffusion time t must be a positive integer, got {t}")
    return int(t)


def gaussian_kernel(X, epsilon):
    """``K_ij = exp(-||x_i - x_j||^2 / epsilon)`` over the columns of `X`."""
    X = as_data_matrix(X, "X")
    epsilon = _check_epsilon(epsilon)
    return np.exp(-cdist(X.T, X.T, "sqeuclidean") / epsilon)


def cross_kernel(Y, X, epsilon):
    """Affinities between new points (columns of `Y`) and training points: shape (N, n)."""
    return np.exp(-cdist(Y.T, X.T, "sqeuclidean") / _check_epsilon(epsilon))


def median2_epsilon(X):
    """Twice the median of all pairwise distances between the columns of `X`."""
    X = as_data_matrix(X, "X")
    if X.shape[1] < 2:
        raise ValidationError("need at least two points to estimate epsilon")
    return 2.0 * float(np.median(pdist(X.T)))


def markov(K):
    """Row-normalise a kernel: returns ``(P, d)`` with ``P = D^{-1} K``."""
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"kernel must be square, got {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValidationError("kernel contains non-finite entries")
    d = K.sum(axis=1)
    if np.any(d <= 0):
        raise ConnectivityError(f"kernel rows {np.flatnonzero(d <= 0)[:5].tolist()} have no mass")
    return K / d[:, None], d


def transition_power(P, t):
    t = _check_t(t)
    Pt = P
    for _ in range(t - 1):
        Pt = Pt @ P
    if not np.all(np.isfinite(Pt)):
        raise NumericalIntegrityError("overflow in the transition matrix power")
    return Pt


def _scale(d):
    return np.sqrt(np.sum(d)), np.sqrt(d)


def g_matrix(P, d, t):
    """``G = ||d||_1^{1/2} D^{-1/2} (P^T)^t``; column ``i`` represents point ``i``."""
    Pt = transition_power(P, t)
    sl, sd = _scale(d)
    return sl * (Pt.T / sd[:, None])


def diffusion_distances(P, d, t):
    """Diffusion distances straight from the definition.

    ``D_t(i, j) = ||(P^t)_{i,:} - (P^t)_{j,:}||`` weighted by ``1/dhat``.
    Returns the full ``n x n`` matrix.
    """
    Pt = transition_power(P, t)
    dhat = d / np.sum(d)
    return squareform(pdist(Pt / np.sqrt(dhat)[None, :]))


def classical_dm(K, t):
    """Dense diffusion map from the eigendecomposition of ``M = D^{-1/2} K D^{-1/2}``."""
    t = _check_t(t)
    P, d = markov(K)
    sd = np.sqrt(d)
    M = (K / sd[:, None]) / sd[None, :]
    M = 0.5 * (M + M.T)
    try:
        w, U = eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalIntegrityError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(-np.abs(w), kind="stable")
    w, U = w[order], U[:, order]
    dhat = d / np.sum(d)
    psi = (U * w**t).T / np.sqrt(dhat)[None, :]
    return ClassicalDm(eigenvalues=w, psi=psi, c=float(np.max(dhat ** -0.5)), t=t)


def _default_far_threshold(d):
    return float(d.shape[0] * np.finfo(np.float64).eps * np.min(d))


def fit_dm(K, t, mu, points=None, epsilon=None, max_dim=None, far_threshold=None,
           keep_embedding=True, workers=None):
    """ICPQR-based diffusion map of a kernel matrix.

    Parameters
    ----------
    K : ndarray, shape (n, n)
        Symmetric nonnegative kernel with positive row sums.
    t : int
        Diffusion time.
    mu : float
        Distortion parameter; diffusion distances are preserved within
        ``2 mu``.
    points, epsilon : optional
        Training points (columns) and Gaussian scale; required later for
        extending raw points with :func:`extend_points`.
    far_threshold : float, optional
        Minimal kernel mass of a new point; defaults to
        ``n * eps * min(d)``.

    Returns
    -------
    DiffusionModel
    """
    t = _check_t(t)
    P, d = markov(K)
    if points is not None:
        points = as_data_matrix(points, "points")
        if points.shape[1] != d.shape[0]:
            raise ShapeError(f"{points.shape[1]} points for a kernel of size {d.shape[0]}")
    if epsilon is not None:
        epsilon = _check_epsilon(epsilon)
    G = g_matrix(P, d, t)
    model = core.fit(G, mu, max_dim=max_dim, keep_embedding=keep_embedding, workers=workers)
    return DiffusionModel(
        epsilon=epsilon,
        t=t,
        degrees=d,
        train=points,
        icpqr=model,
        mu_strict_t=model.mu_strict,
        far_threshold=_default_far_threshold(d) if far_threshold is None else float(far_threshold),
    )


def fit_dm_points(X, epsilon, t, mu, **kwargs):
    """Gaussian-kernel convenience wrapper; ``epsilon="median2"`` picks the scale."""
    X = as_data_matrix(X, "X")
    if isinstance(epsilon, str):
        if epsilon != "median2":
            raise ValidationError(f"unknown epsilon heuristic {epsilon!r}")
        epsilon = median2_epsilon(X)
    K = gaussian_kernel(X, epsilon)
    return fit_dm(K, t, mu, points=X, epsilon=epsilon, **kwargs)


def _require_points(model):
    if model.train is None or model.epsilon is None:
        raise ValidationError("model has no training points/epsilon; supply probability vectors directly")


def oos_probabilities_many(model, Y):
    """Transition probabilities from new points to the training set.

    Returns ``(p, far)``: ``p`` of shape ``(N, n)``, each row summing to one
    (rows of far points are zero), and the boolean far flags.
    """
    _require_points(model)
    Y = as_data_matrix(Y, "Y")
    if Y.shape[0] != model.train.shape[0]:
        raise ShapeError(f"points have dimension {Y.shape[0]}, training set has {model.train.shape[0]}")
    Kx = cross_kernel(Y, model.train, model.epsilon)
    mass = Kx.sum(axis=1)
    far = ~(mass >= model.far_threshold) | (mass <= 0)
    p = np.zeros_like(Kx)
    ok = ~far
    p[ok] = Kx[ok] / mass[ok, None]
    if model.t > 1 and ok.any():
        P, _ = markov(gaussian_kernel(model.train, model.epsilon))
        q = p[ok]
        for _ in range(model.t - 1):
            q = q @ P
        p[ok] = q
    return p, far


def oos_probabilities(model, x):
    """``p^{(t)}(x)`` for one point; returns ``(p, far)``."""
    x = as_vector(x, name="x")
    p, far = oos_probabilities_many(model, x[:, None])
    return p[0], bool(far[0])


def _g_vectors(model, p):
    sl, sd = _scale(model.degrees)
    return sl * (p / sd[None, :])


def _check_prob(p, n):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    if p.shape[1] != n:
        raise ShapeError(f"probability vectors have length {p.shape[1]}, model has {n} points")
    if not np.all(np.isfinite(p)) or np.any(p < -1e-12):
        raise ValidationError("probability vectors must be finite and nonnegative")
    sums = p.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-8):
        raise ValidationError("probability vectors must sum to one")
    return p


def extend_dm(model, p):
    """Embed a point given its transition-probability vector `p` (length ``n``)."""
    p = _check_prob(p, model.n)
    g = _g_vectors(model, p)[0]
    coords, dist = extend_columns(model.icpqr.dictionary, model.icpqr.tri, g[:, None], workers=1)
    return _report(model.icpqr.mu, model.mu_strict_t, coords[:, 0], float(dist[0]))


def extend_dm_many(model, p, workers=None):
    """Batch :func:`extend_dm`; `p` has one probability vector per row."""
    p = _check_prob(p, model.n)
    G = _g_vectors(model, p).T
    return extend_columns(model.icpqr.dictionary, model.icpqr.tri, G, workers=workers)


@dataclass(frozen=True)
class PointExtension:
    """Batch extension of raw points.

    Far points carry NaN coordinates and infinite distortion.
    """

    coords: np.ndarray
    distortion: np.ndarray
    far: np.ndarray
    normal: np.ndarray
    strictly_normal: np.ndarray

    def report(self, i):
        return ExtensionReport(
            coords=self.coords[:, i],
            distortion=float(self.distortion[i]),
            normal=bool(self.normal[i]),
            strictly_normal=bool(self.strictly_normal[i]),
            far=bool(self.far[i]),
        )


def extend_points(model, Y, workers=None):
    """Kernel probabilities, far test and ICPQR extension for the columns of `Y`."""
    p, far = oos_probabilities_many(model, Y)
    N = p.shape[0]
    coords = np.full((model.s, N), np.nan)
    dist = np.full(N, np.inf)
    ok = ~far
    if ok.any():
        c, dd = extend_dm_many(model, p[ok], workers=workers)
        coords[:, ok] = c
        dist[ok] = dd
    return PointExtension(
        coords=coords,
        distortion=dist,
        far=far,
        normal=ok & (dist <= model.icpqr.mu),
        strictly_normal=ok & (dist <= model.mu_strict_t),
    )


def embedding(model):
    """In-sample diffusion embedding ``h_s^{(t)}``, shape ``(s, n)``."""
    return core.embed(model.icpqr)


def analytic_dimension(cdm, distortion):
    """Smallest ``k`` whose analytic bound is ``<= distortion``."""
    n = cdm.eigenvalues.shape[0]
    for k in range(n + 1):
        if cdm.analytic_bound(k) <= distortion:
            return k
    return n


def minimal_dm_dimension(cdm, distortion, measure=None):
    """Smallest ``k`` for which the truncated diffusion map is a `distortion`-distortion.

    `measure(X, Y)` defaults to the all-pairs distortion. The truncation
    distortion is non-increasing in ``k``, so a bisection is used.
    """
    if measure is None:
        from .distortion import max_distortion as measure

    lo, hi = 0, cdm.psi.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if measure(cdm.psi, cdm.truncate(mid)) <= distortion:
            hi = mid
        else:
            lo = mid + 1
    return lo
