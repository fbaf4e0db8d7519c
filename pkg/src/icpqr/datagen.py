"""Seeded synthetic data generators.

Every generator is a pure function of its arguments and seed.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import ValidationError
from .linalg import as_data_matrix

ROLL_R_MIN = 1.5 * np.pi
ROLL_R_MAX = 4.5 * np.pi
ROLL_HEIGHT = 21.0


def _rng(seed):
    return np.random.default_rng(seed)


def _check_count(n, name="n"):
    if int(n) != n or n < 1:
        raise ValidationError(f"{name} must be a positive integer, got {n}")
    return int(n)


def roll_point(r, h):
    """Map intrinsic coordinates to ``(r cos r, h, r sin r)``; arrays broadcast."""
    r = np.asarray(r, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    return np.stack([r * np.cos(r), h, r * np.sin(r)])


def swiss_roll(n, seed=0, height=ROLL_HEIGHT):
    """Uniform samples of the Swiss-roll parameter box.

    ``r`` is uniform on ``[3pi/2, 9pi/2]`` and ``h`` on ``[0, height]``.

    Returns
    -------
    X : ndarray, shape (3, n)
    intrinsic : ndarray, shape (2, n)
        Rows ``r`` and ``h``.
    """
    n = _check_count(n)
    u = _rng(seed).random((2, n))
    r = ROLL_R_MIN + (ROLL_R_MAX - ROLL_R_MIN) * u[0]
    h = height * u[1]
    return roll_point(r, h), np.stack([r, h])


def swiss_roll_grid(step=0.02, height=ROLL_HEIGHT):
    """Dense deterministic sheet of manifold points with spacing about `step`.

    The angular spacing shrinks with the radius so that arc-length spacing
    stays near `step`.
    """
    r = [ROLL_R_MIN]
    while r[-1] < ROLL_R_MAX:
        r.append(r[-1] + step / np.hypot(r[-1], 1.0))
    r = np.minimum(np.array(r), ROLL_R_MAX)
    h = np.linspace(0.0, height, int(np.ceil(height / step)) + 1)
    R, H = np.meshgrid(r, h, indexing="ij")
    return roll_point(R.ravel(), H.ravel())


def distance_to_manifold(Y, grid):
    """Euclidean distance from each column of `Y` to its nearest grid point."""
    d, _ = cKDTree(np.asarray(grid).T).query(np.asarray(Y, dtype=np.float64).T)
    return d


def bounding_box_cloud(X, count, seed=0):
    """Uniform samples from the axis-aligned bounding box of the columns of `X`."""
    X = as_data_matrix(X, "X")
    count = _check_count(count, "count")
    lo = X.min(axis=1)
    hi = X.max(axis=1)
    u = _rng(seed).random((X.shape[0], count))
    out = lo[:, None] + (hi - lo)[:, None] * u
    # keep exact containment despite rounding in lo + (hi - lo) * u
    return np.clip(out, lo[:, None], hi[:, None])


def bounded_noise(shape, eta, seed=0):
    """Gaussian matrix rescaled to spectral norm exactly `eta`."""
    eta = float(eta)
    if not np.isfinite(eta) or eta < 0:
        raise ValidationError(f"eta must be nonnegative, got {eta}")
    m, n = (int(v) for v in shape)
    if m < 1 or n < 1:
        raise ValidationError(f"shape must be positive, got {shape}")
    if eta == 0:
        return np.zeros((m, n))
    N = _rng(seed).standard_normal((m, n))
    return N * (eta / np.linalg.norm(N, 2))


def blobs(n_per_class, centers, spread=1.0, seed=0):
    """Isotropic Gaussian clusters around the columns of `centers`.

    Returns ``(X, y)`` with integer labels ``0..k-1``, grouped by class.
    """
    centers = as_data_matrix(centers, "centers")
    n_per_class = _check_count(n_per_class, "n_per_class")
    m, k = centers.shape
    noise = _rng(seed).standard_normal((m, k * n_per_class)) * float(spread)
    y = np.repeat(np.arange(k), n_per_class)
    return centers[:, y] + noise, y


def subspace_classes(n_per_class, n_classes, dim_per_class=2, seed=0, scale=1.0):
    """Classes living in mutually orthogonal coordinate subspaces.

    Class ``c`` spans the coordinates ``c*dim_per_class ... (c+1)*dim_per_class - 1``
    of an ambient space of dimension ``n_classes * dim_per_class``.
    """
    n_per_class = _check_count(n_per_class, "n_per_class")
    n_classes = _check_count(n_classes, "n_classes")
    dim_per_class = _check_count(dim_per_class, "dim_per_class")
    rng = _rng(seed)
    m = n_classes * dim_per_class
    X = np.zeros((m, n_classes * n_per_class))
    y = np.repeat(np.arange(n_classes), n_per_class)
    for c in range(n_classes):
        rows = slice(c * dim_per_class, (c + 1) * dim_per_class)
        X[rows, y == c] = scale * rng.standard_normal((dim_per_class, n_per_class))
    return X, y


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative description of one generator call."""

    kind: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def generate(self):
        """Run the generator; returns ``(X, extra)`` where `extra` may be None."""
        p = dict(self.params)
        if self.kind == "swiss_roll":
            return swiss_roll(self.n, self.seed, **p)
        if self.kind == "bounding_box":
            ref = p.pop("reference", None)
            if ref is None:
                ref, _ = swiss_roll(p.pop("reference_n", 3000), p.pop("reference_seed", self.seed))
            return bounding_box_cloud(ref, self.n, self.seed), None
        if self.kind == "blobs":
            centers = np.asarray(p.pop("centers", [[0.0, 10.0], [0.0, 0.0]]), dtype=float)
            return blobs(self.n, centers, seed=self.seed, **p)
        if self.kind == "noise":
            m = int(p.pop("m", 3))
            return bounded_noise((m, self.n), p.pop("eta", 1.0), self.seed), None
        if self.kind == "subspaces":
            return subspace_classes(self.n, int(p.pop("classes", 5)), seed=self.seed, **p)
        raise ValidationError(f"unknown generator kind {self.kind!r}")
