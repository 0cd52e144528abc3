"""
Random Fourier series and cosine-series analytics
=================================================

A stationary random Fourier series on the circle has covariance
K(t-s) = a_0/2 + Σ a_k cos(k(t-s)).  Everything about its regularity is
encoded in the squared coefficients a_k.
"""

import math

import numpy as np

from gaussrough import fourier as fo

# Decay like k^{-(1+1/ρ)} gives Hölder exponent 1/ρ for K near the origin.
t = np.linspace(0, 2 * math.pi, 2**10 + 1)
for rho in (1.25, 1.6, 2.0):
    K = fo.cosine_eval(fo.power_law(1 + 1 / rho), t, 2**12)
    print(f"rho = {rho}: measured Hölder exponent {fo.holder_estimate(K):.3f}, expected {1 / rho:.3f}")

# Convexity of K on (0, 2π) follows from concavity of k² a_k together with
# a decay condition; both are checked up to a finite K_max.
for alpha in (0.6, 0.9, 1.0):
    v = fo.convexity_check(fo.power_law(2 * alpha), 10**5)
    print(f"a_k = k^-{2 * alpha:.1f}:", v.to_dict()["label"], "->", "pass" if v.passed else "fail")
alt = fo.from_callable(lambda k: (-1.0) ** k / np.asarray(k, float) ** 2, k_max=10**5)
print("alternating signs:", "pass" if fo.convexity_check(alt, 10**4).passed else "fail")

# Multipliers b_k act on covariances as convolution with a signed measure
# whose total variation is bounded by a simple series.
harmonic = fo.from_callable(lambda k: 1 / np.maximum(k, 1), k_max=10**6, a0=1.0)
print("\nquasi-convex bound for b_k = 1/k:", fo.tv_bound(harmonic, "quasi_convex").bound)
for tau in (1e-3, 1e-1, 1.0):
    heat = fo.from_callable(lambda k, tau=tau: np.exp(-tau * np.asarray(k, float) ** 2), k_max=10**5, a0=1.0)
    print(f"heat multiplier tau={tau}: bound {fo.tv_bound(heat, 'monotone_majorant').bound:.4f}")

# On the whole line the same question is asked of a spectral density.  The
# fractional OU density gives a covariance that is convex only from some
# x_0 > 0 on.
detected, x0, vals = fo.fejer_convexity_probe(fo.fractional_ou_density(0.4, 1.0), np.linspace(0.05, 2.0, 12))
print(f"\nfractional OU: convex from x0 = {x0:.2f} (detected: {detected})")
