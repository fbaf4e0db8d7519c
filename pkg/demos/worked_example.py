"""Greedy pivoting on a small matrix where column order matters.

The 7x7 upper-triangular matrix of ones (last diagonal entry 20) needs all
seven coordinates to keep distances within 3 if its columns are taken in
their natural order. Letting the residual norm pick the order, three pivots
suffice.
"""
import numpy as np

from icpqr import core, extension, max_distortion

A = np.triu(np.ones((7, 7)))
A[6, 6] = 20.0

model = core.fit(A, mu=1.5)
print(f"dictionary size s = {model.s}")
print(f"pivot columns (1-based) = {(model.pivots + 1).tolist()}")
print(f"largest in-sample residual = {model.mu_strict:.6f} (below mu = 1.5)")
print(f"max pairwise distance error = {max_distortion(A, model.embedding):.6f} (bound 2 mu = 3)")

# without pivoting, A is its own R factor; keeping its first k rows is the
# natural-order k-dimensional embedding
print("natural order, distance error by dimension:")
for k in range(1, 8):
    print(f"  k={k}: {max_distortion(A, A[:k]):.4f}")

x = np.array([1, 1, 1, 1, 0, 0, 0], dtype=float)
rep = extension.extend(model, x)
print(f"new point: coords {np.round(rep.coords, 4).tolist()}, distortion rate {rep.distortion:.4f}, {rep.verdict}")
