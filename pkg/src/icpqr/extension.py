"""Out-of-sample extension and distortion-based normality.

A fitted dictionary ``b_1, ..., b_s`` together with the triangular core
``tri`` (``tri[i, j] = R̄[i, π(j)]``) is all that is needed to embed a new
vector: the coordinates are ``Q^T x`` with ``Q = B tri^{-1}``, obtained by
forward substitution on ``tri^T f = B^T x`` without ever forming ``Q``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import os

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import NumericalIntegrityError, ShapeError, ValidationError
from .linalg import as_data_matrix, as_vector

NORMAL = "normal"
STRICTLY_NORMAL = "strictly_normal"
ABNORMAL = "abnormal"

# radicands below -NEGATIVE_RADICAND_RTOL * ||x||^2 cannot come from roundoff
NEGATIVE_RADICAND_RTOL = 1e-6


@dataclass(frozen=True)
class ExtensionReport:
    """Result of extending one vector.

    `verdict` combines both thresholds: ``strictly_normal`` when the
    distortion is within ``mu_strict``, ``normal`` when within ``mu`` only,
    ``abnormal`` otherwise. Points flagged `far` skipped the extension (their
    kernel mass vanished) and are abnormal by fiat.
    """

    coords: np.ndarray
    distortion: float
    normal: bool
    strictly_normal: bool
    far: bool = False

    @property
    def verdict(self):
        if self.strictly_normal:
            return STRICTLY_NORMAL
        if self.normal:
            return NORMAL
        return ABNORMAL


def default_workers():
    """Worker cap from ``ICPQR_THREADS`` (defaults to 1)."""
    try:
        return max(1, int(os.environ.get("ICPQR_THREADS", "1")))
    except ValueError:
        return 1


def forward_coords(dictionary, tri, x):
    """Coordinates ``f`` of one vector: ``f_j = (b_j^T x - sum_{i<j} tri[i,j] f_i) / tri[j,j]``."""
    c = dictionary.T @ x
    return solve_triangular(tri, c, trans="T", lower=False, check_finite=False)


def distortion_rate(x_sqnorm, coords):
    """``(||x||^2 - ||F_s(x)||^2)^{1/2}``, clamping roundoff-level negatives to 0.

    Accurate only to about ``sqrt(eps) * ||x||``; :func:`extend` reports the
    directly computed residual norm instead and uses this form as a
    consistency check.
    """
    rad = x_sqnorm - float(coords @ coords)
    _check_radicand(rad, x_sqnorm)
    return float(np.sqrt(max(rad, 0.0)))


def _check_radicand(rad, x_sqnorm):
    if rad < -NEGATIVE_RADICAND_RTOL * max(x_sqnorm, np.finfo(float).tiny):
        raise NumericalIntegrityError(
            f"projection is longer than the vector (radicand {rad:.3e}); "
            "the model does not match this data"
        )


def _point(dictionary, tri, x):
    f = forward_coords(dictionary, tri, x)
    xx = float(x @ x)
    _check_radicand(xx - float(f @ f), xx)
    # ||x - Q f|| with Q f = dictionary @ tri^{-1} f; same value as the
    # radicand form but without its sqrt(eps) cancellation floor
    w = solve_triangular(tri, f, lower=False, check_finite=False)
    r = x - dictionary @ w
    return f, float(np.sqrt(r @ r))


def _extend_block(dictionary, tri, X, cols):
    s = tri.shape[0]
    out_c = np.empty((s, len(cols)))
    out_d = np.empty(len(cols))
    for k, i in enumerate(cols):
        f, dist = _point(dictionary, tri, X[:, i])
        out_c[:, k] = f
        out_d[k] = dist
    return out_c, out_d


def extend_columns(dictionary, tri, X, workers=None):
    """Extend every column of `X`; returns ``(coords (s, N), distortions (N,))``.

    Each column goes through the same single-vector kernel, so the output is
    bitwise independent of batch size and of the number of workers.
    """
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[1]
    s = tri.shape[0]
    if s == 0:
        return np.zeros((0, N)), np.sqrt(np.einsum("ij,ij->j", X, X))
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or N < 2 * workers:
        return _extend_block(dictionary, tri, X, range(N))
    chunks = np.array_split(np.arange(N), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _extend_block(dictionary, tri, X, c), chunks))
    return np.concatenate([p[0] for p in parts], axis=1), np.concatenate([p[1] for p in parts])


def _check_dim(model, m):
    if m != model.m:
        raise ShapeError(f"vector dimension {m} does not match the model dimension {model.m}")


def extend(model, x):
    """Embed one out-of-sample vector and report its distortion rate.

    Parameters
    ----------
    model : IcpqrModel
    x : array_like, shape (m,)

    Returns
    -------
    ExtensionReport
    """
    x = as_vector(x, name="x")
    _check_dim(model, x.shape[0])
    coords, dist = extend_columns(model.dictionary, model.tri, x[:, None], workers=1)
    return _report(model.mu, model.mu_strict, coords[:, 0], float(dist[0]))


def extend_many(model, X, workers=None):
    """Vectorised :func:`extend` over the columns of `X`.

    Returns ``(coords, distortions)`` of shapes ``(s, N)`` and ``(N,)``.
    """
    X = as_data_matrix(X, "X")
    _check_dim(model, X.shape[0])
    return extend_columns(model.dictionary, model.tri, X, workers=workers)


def _report(mu, mu_strict, coords, dist, far=False):
    return ExtensionReport(
        coords=coords,
        distortion=dist,
        normal=(not far) and dist <= mu,
        strictly_normal=(not far) and mu_strict is not None and dist <= mu_strict,
        far=far,
    )


def resolve_kappa(model, policy):
    """Threshold for a policy: ``"mu"``, ``"strict"`` or a nonnegative number."""
    if isinstance(policy, str):
        if policy == "mu":
            return model.mu
        if policy in ("strict", "mu_strict"):
            if model.mu_strict is None:
                raise ValidationError("model carries no mu_strict")
            return model.mu_strict
        if policy.startswith("kappa="):
            policy = float(policy.split("=", 1)[1])
        else:
            raise ValidationError(f"unknown policy {policy!r}")
    kappa = float(policy)
    if not np.isfinite(kappa) or kappa < 0:
        raise ValidationError(f"kappa must be nonnegative, got {kappa}")
    return kappa


def verdict_for(distortion, kappa, policy):
    if distortion <= kappa:
        return STRICTLY_NORMAL if policy in ("strict", "mu_strict") else NORMAL
    return ABNORMAL


def classify(model, x, policy):
    """Single verdict for `x` under an explicit threshold policy.

    ``x`` is normal iff its distortion rate is ``<= kappa`` (inclusive). Under
    the ``"strict"`` policy the positive verdict is reported as
    ``strictly_normal``.
    """
    kappa = resolve_kappa(model, policy)
    rep = extend(model, x)
    return verdict_for(rep.distortion, kappa, policy if isinstance(policy, str) else "kappa")


def mu_strict(model, A, workers=None):
    """Largest in-sample distortion rate, ``sup_i b(a_i)``."""
    _, dist = extend_many(model, A, workers=workers)
    return float(dist.max()) if dist.size else 0.0
