"""Classification by smallest reconstruction residual.

Each class gets its own ICPQR dictionary. A new point goes to the class
whose dictionary reconstructs it best. The example classes live in
orthogonal three-dimensional coordinate subspaces with a little noise. mu is
chosen on a held-out 20% of the training data from a grid that starts above
the noise level, so each dictionary stays close to its own subspace.
"""
import numpy as np

from icpqr import datagen, multiclass

X, y = datagen.subspace_classes(60, 5, dim_per_class=3, seed=1)
T, t = datagen.subspace_classes(40, 5, dim_per_class=3, seed=2)
rng = np.random.default_rng(3)
X += 0.01 * rng.standard_normal(X.shape)
T += 0.01 * rng.standard_normal(T.shape)

mu = multiclass.select_mu(X, y, [0.05, 0.1, 0.5, 1.0])
bundle = multiclass.fit_multiclass(X, y, mu)
pred, rates = multiclass.predict_many(bundle, T)
acc = np.mean(np.array(pred) == t)
print(f"selected mu = {mu}, dictionary sizes {[m.s for m in bundle.models]}")
print(f"test accuracy {acc:.1%}")
print("residuals of the first test point per class:", np.round(rates[:, 0], 3).tolist())
