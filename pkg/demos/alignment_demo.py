"""Aligning two embeddings of the same points.

Two runs of a method can return the same geometry in different orientations.
align() rotates and shifts the second embedding onto the first without
changing any pairwise distance. Here a rotated, shifted copy of an ICPQR
embedding is mapped back onto the original.
"""
import numpy as np

from icpqr import align, core, datagen, max_distortion

X, _ = datagen.swiss_roll(400, seed=0)
H = core.fit(X, 0.5).embedding
rng = np.random.default_rng(1)
Q0, _ = np.linalg.qr(rng.standard_normal((H.shape[0], H.shape[0])))
B = Q0 @ H + 5.0

res = align(H, B)
print(f"error before: {np.linalg.norm(B - H) / np.linalg.norm(H):.3f} (relative)")
print(f"error after:  {np.linalg.norm(res.aligned - H) / np.linalg.norm(H):.2e}")
print(f"distance change introduced by the alignment: {max_distortion(B, res.aligned):.2e}")
