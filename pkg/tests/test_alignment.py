import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icpqr.alignment import align
from icpqr.distortion import max_distortion
from icpqr.exceptions import ValidationError


def rotated_copy(rng, m=3, n=40):
    A = rng.standard_normal((m, n)) * np.linspace(3, 1, m)[:, None]
    Q0, _ = np.linalg.qr(rng.standard_normal((m, m)))
    c = rng.standard_normal(m) * 5
    return A, Q0 @ A + c[:, None]


def test_self_alignment():
    rng = np.random.default_rng(0)
    A, _ = rotated_copy(rng)
    res = align(A, A)
    assert np.allclose(res.aligned, A, atol=1e-9)


def test_rotated_copy_recovered():
    rng = np.random.default_rng(1)
    A, B = rotated_copy(rng, m=4)
    res = align(A, B)
    assert np.linalg.norm(res.aligned - A) <= 1e-6 * np.linalg.norm(A)
    assert np.allclose(res.rotation @ res.rotation.T, np.eye(4), atol=1e-10)
    assert np.linalg.norm(res.aligned - A) <= np.linalg.norm(B - A)


def test_padding_to_common_dimension():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((3, 20))
    B = rng.standard_normal((2, 20))
    res = align(A, B)
    assert res.aligned.shape == (3, 20)
    assert max_distortion(B, res.aligned) <= 1e-10


def test_column_mismatch():
    with pytest.raises(ValidationError):
        align(np.ones((2, 3)), np.ones((2, 4)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(2, 30))
def test_isometry_on_random_input(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    B = rng.standard_normal((int(rng.integers(1, 7)), n)) * 3
    res = align(A, B)
    assert max_distortion(B, res.aligned) <= 1e-10 * max(1.0, np.abs(B).max())
