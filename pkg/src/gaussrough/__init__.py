"""Numerics for Gaussian rough paths.

Modules: ``covariance`` (catalog of covariance models), ``variation`` (1D and
mixed 2D variation), ``fourier`` (cosine-series analytics), ``gaussian``
(sampling and conditioning), ``roughpath`` (truncated signatures and
metrics), ``criteria`` (sufficient-condition checks), ``she`` (heat equation
and random Fourier series experiments) and ``cli``.
"""

__version__ = "0.1.0"
