"""Classification by minimal distortion rate.

One ICPQR dictionary is fitted per class with a shared ``mu``; a new point
goes to the class whose dictionary reconstructs it best.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import core
from .exceptions import ShapeError, ValidationError
from .extension import default_workers, extend_columns
from .linalg import as_data_matrix, as_vector


@dataclass(frozen=True)
class ClassifierBundle:
    """Per-class ICPQR models sharing one ``mu``.

    Attributes
    ----------
    labels : tuple
        Class identifiers in model order; ties go to the earlier label.
    models : tuple of IcpqrModel
    mu : float
    """

    labels: tuple
    models: tuple
    mu: float

    @property
    def m(self):
        return self.models[0].m


def _class_order(y):
    # order of first appearance
    seen = {}
    for v in y:
        seen.setdefault(v, len(seen))
    return tuple(seen)


def _labels(y, n):
    y = list(np.asarray(y).tolist()) if not isinstance(y, (list, tuple)) else list(y)
    if len(y) != n:
        raise ShapeError(f"{len(y)} labels for {n} points")
    return y


def fit_multiclass(X, y, mu, labels=None, workers=None):
    """Fit one model per class on the matching columns of `X`.

    Parameters
    ----------
    X : array_like, shape (m, n)
    y : sequence of length n
    mu : float
    labels : sequence, optional
        Class order (defaults to order of first appearance in `y`). Every
        listed class needs at least one sample.
    """
    X = as_data_matrix(X, "X")
    y = _labels(y, X.shape[1])
    order = _class_order(y) if labels is None else tuple(labels)
    if len(set(order)) != len(order):
        raise ValidationError("duplicate class labels")
    if not order:
        raise ValidationError("no classes to fit")
    ya = np.empty(len(y), dtype=object)
    ya[:] = y
    idx = []
    for lab in order:
        cols = np.flatnonzero(ya == lab)
        if cols.size == 0:
            raise ValidationError(f"class {lab!r} has no samples")
        idx.append(cols)
    workers = default_workers() if workers is None else max(1, int(workers))
    job = lambda cols: core.fit(X[:, cols], mu, keep_embedding=False, workers=1)
    if workers == 1:
        models = [job(c) for c in idx]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(job, idx))
    return ClassifierBundle(labels=order, models=tuple(models), mu=float(mu))


def distortions(bundle, X, workers=None):
    """Per-class distortion rates of every column: shape ``(n_classes, N)``."""
    X = as_data_matrix(X, "X")
    if X.shape[0] != bundle.m:
        raise ShapeError(f"points have dimension {X.shape[0]}, bundle expects {bundle.m}")
    return np.vstack([
        extend_columns(mdl.dictionary, mdl.tri, X, workers=workers)[1] for mdl in bundle.models
    ])


def predict(bundle, x):
    """Label of the class with the smallest distortion rate, and all rates."""
    x = as_vector(x, length=bundle.m, name="x")
    b = distortions(bundle, x[:, None], workers=1)[:, 0]
    return bundle.labels[int(np.argmin(b))], b


def predict_many(bundle, X, workers=None):
    """Labels (list) and the distortion matrix for the columns of `X`."""
    b = distortions(bundle, X, workers=workers)
    return [bundle.labels[i] for i in np.argmin(b, axis=0)], b


def accuracy(bundle, X, y):
    pred, _ = predict_many(bundle, X)
    y = _labels(y, len(pred))
    return float(np.mean([p == t for p, t in zip(pred, y)]))


def split_indices(y, split=0.8, seed=0):
    """Seeded shuffle split; returns ``(train_idx, val_idx)``."""
    if not 0 < split < 1:
        raise ValidationError(f"split must lie in (0, 1), got {split}")
    n = len(y)
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(split * n))
    return np.sort(perm[:k]), np.sort(perm[k:])


def select_mu(X, y, grid, split=0.8, seed=0):
    """Grid value with the best validation accuracy (smallest on ties).

    Raises if a class ends up absent from either side of the split.
    """
    X = as_data_matrix(X, "X")
    y = _labels(y, X.shape[1])
    grid = [float(g) for g in grid]
    if not grid:
        raise ValidationError("empty mu grid")
    classes = _class_order(y)
    tr, va = split_indices(y, split, seed)
    ytr = [y[i] for i in tr]
    yva = [y[i] for i in va]
    for lab in classes:
        if lab not in ytr or lab not in yva:
            raise ValidationError(f"class {lab!r} missing from one side of the split")
    best, best_acc = None, -1.0
    for mu in sorted(grid):
        bundle = fit_multiclass(X[:, tr], ytr, mu, labels=classes)
        acc = accuracy(bundle, X[:, va], yva)
        if acc > best_acc:
            best, best_acc = mu, acc
    return best
