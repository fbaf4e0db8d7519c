"""Fitting on noisy data still preserves the clean geometry.

Noise with spectral norm eta is added before fitting. Distances in the
resulting embedding are then compared with the clean data. The error stays
within 2 (mu + eta).
"""
import numpy as np

from icpqr import datagen
from icpqr.core import noise_stability_check

X, _ = datagen.swiss_roll(500, seed=3)
for eta in (0.01, 0.1, 1.0):
    N = datagen.bounded_noise(X.shape, eta, seed=4)
    dist, bound = noise_stability_check(X, N, mu=1.0)
    print(f"eta={eta:<5} clean-geometry distortion {dist:.4f} <= {bound:.2f}")
