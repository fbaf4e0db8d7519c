"""Orthogonal alignment of one embedding onto another.

Both point sets are centred on their column means, each is rotated onto its
own principal axes, and the target is mapped into the reference's axes:

    B_aligned = U_A U_B^T (B - b 1^T) + a 1^T.

The map is an orthogonal transform plus a translation, so the geometry of
``B`` is untouched.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .linalg import as_data_matrix, full_left_singular_vectors


@dataclass(frozen=True)
class AlignmentResult:
    """Output of :func:`align`.

    Attributes
    ----------
    aligned : ndarray, shape (m, n)
        The transformed target, in the padded dimension ``m``.
    rotation : ndarray, shape (m, m)
        Orthogonal ``U_A U_B^T``.
    ref_mean, target_mean : ndarray, shape (m,)
    """

    aligned: np.ndarray
    rotation: np.ndarray
    ref_mean: np.ndarray
    target_mean: np.ndarray


def _pad(M, m):
    if M.shape[0] == m:
        return M
    return np.vstack([M, np.zeros((m - M.shape[0], M.shape[1]))])


def align(A, B):
    """Align the columns of `B` to those of `A` (same number of columns).

    Singular vectors are only defined up to sign. Each left singular vector
    of the centred target is flipped so that its right singular vector
    correlates nonnegatively with the reference's, which makes an exactly
    rotated copy map back onto the reference. Reflections are allowed.

    Parameters
    ----------
    A : array_like, shape (m_a, n)
        Reference.
    B : array_like, shape (m_b, n)
        Target; the one with fewer rows is zero-padded.

    Returns
    -------
    AlignmentResult
    """
    A = as_data_matrix(A, "A")
    B = as_data_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValidationError(f"A has {A.shape[1]} columns but B has {B.shape[1]}")
    m = max(A.shape[0], B.shape[0])
    A, B = _pad(A, m), _pad(B, m)
    a = A.mean(axis=1)
    b = B.mean(axis=1)
    Ua, _, Va = full_left_singular_vectors(A - a[:, None])
    Ub, _, Vb = full_left_singular_vectors(B - b[:, None])
    r = min(Va.shape[1], Vb.shape[1])
    flip = np.sign(np.einsum("ij,ij->j", Va[:, :r], Vb[:, :r]))
    flip[flip == 0] = 1.0
    Ub = Ub.copy()
    Ub[:, :r] *= flip
    rotation = Ua @ Ub.T
    aligned = rotation @ (B - b[:, None]) + a[:, None]
    return AlignmentResult(aligned=aligned, rotation=rotation, ref_mean=a, target_mean=b)
