"""Dimensionality reduction by incomplete pivoted Q-less QR.

Points are the columns of an ``(m, n)`` array throughout.
"""
from .alignment import AlignmentResult, align
from .baseline import pca_embed
from .core import (
    IcpqrModel,
    align_optimal_coords,
    approximation_error,
    embed,
    expand_q,
    fit,
    noise_stability_check,
)
from .diffusion import (
    ClassicalDm,
    DiffusionModel,
    classical_dm,
    extend_dm,
    extend_points,
    fit_dm,
    fit_dm_points,
    g_matrix,
    gaussian_kernel,
    markov,
    oos_probabilities,
)
from .distortion import max_distortion, sampled_max_distortion, verify_distortion
from .exceptions import (
    BoundViolation,
    ConditioningWarning,
    ConnectivityError,
    NumericalIntegrityError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .extension import ExtensionReport, classify, extend, extend_many, mu_strict
from .linalg import reference_pivoted_qr, thin_svd
from .multiclass import ClassifierBundle, fit_multiclass, predict, select_mu
from .storage import load_model, save_model

__all__ = [
    "AlignmentResult",
    "BoundViolation",
    "ClassicalDm",
    "ClassifierBundle",
    "ConditioningWarning",
    "ConnectivityError",
    "DiffusionModel",
    "ExtensionReport",
    "IcpqrModel",
    "NumericalIntegrityError",
    "ParseError",
    "ShapeError",
    "ValidationError",
    "align",
    "align_optimal_coords",
    "approximation_error",
    "classical_dm",
    "classify",
    "embed",
    "expand_q",
    "extend",
    "extend_dm",
    "extend_many",
    "extend_points",
    "fit",
    "fit_dm",
    "fit_dm_points",
    "fit_multiclass",
    "g_matrix",
    "gaussian_kernel",
    "load_model",
    "markov",
    "max_distortion",
    "mu_strict",
    "noise_stability_check",
    "oos_probabilities",
    "pca_embed",
    "predict",
    "reference_pivoted_qr",
    "sampled_max_distortion",
    "save_model",
    "select_mu",
    "thin_svd",
    "verify_distortion",
]
