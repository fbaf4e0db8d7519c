import numpy as np
import pytest

from icpqr.baseline import pca_dimension_for, pca_embed
from icpqr.distortion import max_distortion
from icpqr.exceptions import ValidationError


def test_full_rank_is_exact():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 20))
    E, bound = pca_embed(A, 3)
    assert bound == 0 and max_distortion(A, E) <= 1e-8


def test_diagonal_example():
    A = np.diag([3.0, 2.0, 1.0])
    E, bound = pca_embed(A, 2)
    assert bound == pytest.approx(2.0)
    assert max_distortion(A, E) <= 2.0


def test_bound_holds_along_sweep():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((20, 100))
    for k in range(21):
        E, bound = pca_embed(A, k)
        assert max_distortion(A, E) <= bound + 1e-8


def test_range_and_dimension_search():
    with pytest.raises(ValidationError):
        pca_embed(np.eye(2), 3)
    rng = np.random.default_rng(2)
    A = rng.standard_normal((6, 30))
    k, d = pca_dimension_for(A, 1.0, max_distortion)
    assert d <= 1.0
    if k:
        E, _ = pca_embed(A, k - 1)
        assert max_distortion(A, E) > 1.0
