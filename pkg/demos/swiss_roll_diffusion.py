"""Diffusion maps of a Swiss roll through ICPQR.

A Gaussian kernel (eps = 3) on a uniform Swiss-roll sample defines a Markov
chain. ICPQR on the diffusion matrix G picks a subset of sample points whose
span preserves all diffusion distances within 2 mu. Larger mu, smaller
dictionary. Pass the sample size as the first argument (default 3000).
"""
import sys
import time

from icpqr import datagen, diffusion, verify_distortion

n = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
X, _ = datagen.swiss_roll(n, seed=7)
K = diffusion.gaussian_kernel(X, 3.0)
P, d = diffusion.markov(K)
G = diffusion.g_matrix(P, d, 1)

print(f"{'mu':>6} {'s':>6} {'distortion':>11} {'2 mu':>6} {'seconds':>8}")
for mu in (10.0, 5.0, 1.0, 0.1):
    t0 = time.perf_counter()
    model = diffusion.fit_dm(K, 1, mu, points=X, epsilon=3.0)
    elapsed = time.perf_counter() - t0
    dist, sampled = verify_distortion(G, diffusion.embedding(model))
    tag = "*" if sampled else ""
    print(f"{mu:6g} {model.s:6d} {dist:10.4f}{tag:1} {2 * mu:6g} {elapsed:8.2f}")
print("* sampled pairs (a necessary check only)" if n > 2000 else "")

