"""
Mixed variation of covariance functions
=======================================

How rough is a Gaussian process?  One answer is the two-dimensional
(γ,ρ)-variation of its covariance over squares [s,t]².  For the processes
in the catalog it scales like |t-s|^{1/ρ}, and the slope of a log-log fit
recovers 1/ρ.
"""

import numpy as np

from gaussrough import covariance as cv
from gaussrough import variation as vr
from gaussrough.covariance import Interval, Rectangle

# Brownian motion first.  Its covariance min(s,t) has independent
# increments, so every product dissection of the unit square adds up the
# overlap lengths of the cells: the exact 1-variation is 1 on any grid.
bm = cv.fbm(0.5)
sq = Rectangle(Interval(0, 1), Interval(0, 1))
for n in (3, 7, 12):
    est = vr.mixed_var(bm, sq, n, n, 1, 1, mode="exact")
    print(f"Brownian V_1 on a {n}x{n} grid: {est.value:.12f}")

# Rougher fractional Brownian motion needs ρ = 1/(2H).  The exact supremum
# over sub-dissections beats the plain full-grid value.
m = cv.fbm(0.3)
rho = 1 / 0.6
exact = vr.mixed_var(m, sq, 9, 9, 1, rho, mode="exact")
lower = vr.mixed_var(m, sq, 9, 9, 1, rho, mode="lower")
print(f"\nFBM(0.3): exact {exact.value:.4f} >= full grid {lower.value:.4f}")
print("  maximising rows:", np.round(exact.argmax[0].points, 3))

# Scaling over dyadic squares [0, 2^-j]².
print("\nslope of log V_{1,rho}([0,h]^2) against log h:")
for model, r in [(cv.fbm(0.5), 1.0), (cv.fbm(0.4), 1.25), (cv.fbm(0.3), rho), (cv.bifbm(0.6, 0.7), 1 / 0.84)]:
    fit = vr.scaling_fit(model, 1, r, vr.dyadic_squares(model.domain, range(1, 7)), grid_n=32)
    print(f"  {model.tag:24s} slope {fit.slope:.3f}   1/rho = {1 / r:.3f}")

# The region variants split a square into the part above the diagonal
# strip, the strip itself and the part below.  The full-square variant is
# controlled by the three pieces up to a constant at most 3.
G = cv.gram(m, np.linspace(0, 1, 10), check_psd=False)
whole = vr.vplus_matrix(G, "square", 1, rho)
pieces = {reg: vr.vplus_matrix(G, reg, 1, rho) for reg in ("U", "D", "L")}
C = vr.concatenation_constant(1, rho)
print(f"\nV+ square {whole:.4f} <= {C:.3f} * ({' + '.join(f'{v:.4f}' for v in pieces.values())})")
