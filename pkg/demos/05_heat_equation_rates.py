"""
Spatial rough paths of the fractional stochastic heat equation
==============================================================

Every Fourier mode of the stationary solution is an Ornstein-Uhlenbeck
process.  A spatial slice is therefore a random Fourier series, and the
Galerkin truncation and hyper-viscous regularisation can be coupled to it
mode by mode.  We measure convergence rates of the lifted slices.

Path counts here are small so the script runs in well under a minute; the
acceptance suite uses 1000 paths.
"""

from gaussrough import she
from gaussrough.fourier import power_law

cfg = she.SHEConfig(alpha=0.9, n_modes=1024, x_n=1025, M=150, seed=0)
print(f"alpha = {cfg.alpha}, rho = {cfg.rho:.3f}")

fit, pts = she.galerkin_rate(cfg, [16, 32, 64, 128, 256], beta=0.1)
print("\nGalerkin truncation, L2 distance of the lifts:")
for p in pts:
    print(f"  N = {1 / p.x:5.0f}: {p.distance:.4f} ± {p.se:.4f}")
print(f"  rate {fit.slope:.3f} (asymptotic target 0.3)")

_, pts = she.hyperviscosity_rate(cfg, 2.0, [1e-1, 1e-2, 1e-3, 1e-4], beta=0.1)
print("\nhyper-viscosity:")
for p in pts:
    print(f"  eps = {p.x:.0e}: {p.distance:.4f} ± {p.se:.4f}")

cfg1 = she.SHEConfig(alpha=1.0, n_modes=1024, x_n=1025, M=150, seed=0)
fit, _ = she.time_regularity_probe(cfg1, 0.05, [2.0**-j for j in (4, 6, 8, 10, 12)])
print(f"\ntime regularity of the lifted slice at alpha = 1: exponent {fit.slope:.3f} (close to 1/4)")

fit, _ = she.rfs_moment_scaling(power_law(1.8), M=300)
print(f"random Fourier series k^-1.8: second moment exponent {fit.slope:.3f} (target 0.8)")
