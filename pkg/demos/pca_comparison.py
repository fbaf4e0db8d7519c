"""ICPQR dictionaries versus PCA on a diffusion matrix.

For each mu, the achieved ICPQR distortion is matched by the smallest PCA
truncation that does as well. The script also prints the dimension needed
by the singular-value bound. PCA is optimal in the Frobenius sense, but
ICPQR keeps actual data points as its basis and needs no eigensolver.
"""
import numpy as np

from icpqr import datagen, diffusion, max_distortion
from icpqr.baseline import pca_dimension_for

X, _ = datagen.swiss_roll(600, seed=2)
K = diffusion.gaussian_kernel(X, 3.0)
P, d = diffusion.markov(K)
G = diffusion.g_matrix(P, d, 1)
cdm = diffusion.classical_dm(K, 1)
S = np.linalg.svd(G, compute_uv=False)

print(f"{'mu':>5} {'icpqr s':>8} {'achieved':>9} {'pca k':>6} {'pca bound k':>12} {'dm bound k':>11}")
for mu in (5.0, 2.0, 1.0, 0.5):
    model = diffusion.fit_dm(K, 1, mu)
    achieved = max_distortion(G, diffusion.embedding(model))
    k, _ = pca_dimension_for(G, achieved, max_distortion)
    kb = next(j for j in range(len(S) + 1) if 2 * (S[j] if j < len(S) else 0) <= achieved)
    print(f"{mu:5g} {model.s:8d} {achieved:9.4f} {k:6d} {kb:12d} {diffusion.analytic_dimension(cdm, achieved):11d}")
