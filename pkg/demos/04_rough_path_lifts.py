"""
Sampling, lifting and the Cameron-Martin space
==============================================

Sample a two-dimensional fractional Brownian motion, compute its
signature, look at the Lévy area and check the embedding inequality for
Cameron-Martin paths.
"""

import numpy as np

from gaussrough import covariance as cv
from gaussrough import gaussian as gs
from gaussrough import roughpath as rp

m = cv.fbm(0.4)
grid = np.linspace(0, 1, 257)
e = gs.sample_cholesky(m, grid, d=2, M=500, seed=1)
print("sampled", e.data.shape, "paths x times x components")

rec = rp.signature(e.data, 3, grid, beta=0.3)
area = rp.levy_area(rec)[:, 0, 1]
print(f"Lévy area at t=1: mean {area.mean():+.4f}, std {area.std():.4f}")

# The homogeneous norm of increments over [s, s+h] scales like h^H.
for h in (1 / 8, 1 / 32, 1 / 128):
    k = int(round(h * 256))
    s = np.arange(0, 256, k)
    norms = rp.hnorm(rec.increment(s, s + k))
    print(f"h = {h:.4f}: mean hnorm {norms.mean():.4f}, ratio to h^0.4 {norms.mean() / h**0.4:.3f}")

# Chen's identity: the signature of a concatenation is the tensor product.
x = e.data[0]
whole = rp.signature(x, 3).end()
split = rp.tensor_mul(rp.signature(x[:101], 3).end(), rp.signature(x[100:], 3).end())
print("Chen identity error:", whole.max_abs_diff(split))

# Cameron-Martin elements h(t) = Σ c_i R(s_i, t) have finite q-variation
# with q = 1/(H + 1/2), controlled by their norm times the covariance.
res = gs.embedding_trials(m, 1.25, n_elements=200, n_points=32, seed=2)
print(f"\nembedding inequality on 200 random elements, q = {gs.cm_exponent(1.25):.3f}:")
print(f"  smallest slack {res[:, 2].min():.4f} (never negative)")
