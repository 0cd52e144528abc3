import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussrough import fourier as fo

TWO_PI = 2 * math.pi


def zero_seq(a0=0.0):
    return fo.from_callable(lambda k: np.zeros(np.shape(k)), k_max=10**6, a0=a0, name="zero")


# -- evaluation ------------------------------------------------------------------


def test_zero_series():
    t = np.linspace(0, TWO_PI, 11)
    np.testing.assert_array_equal(fo.cosine_eval(zero_seq(), t, 50), 0.0)


def test_constant_series():
    t = np.linspace(0, TWO_PI, 11)
    np.testing.assert_allclose(fo.cosine_eval(zero_seq(2.0), t, 50), 1.0)


def test_zeta_two_at_origin():
    a = fo.power_law(2.0)
    N = 10**5
    # tail of sum 1/k^2 beyond N is about 1/N
    assert abs(fo.cosine_eval(a, 0.0, N) - math.pi**2 / 6) <= 1.01 / N


@settings(max_examples=30, deadline=None)
@given(st.floats(1.1, 3.0), st.floats(0.0, 2.0), st.integers(1, 60))
def test_abel_identity(exponent, a0, n):
    a = fo.power_law(exponent, a0=a0)
    t = np.linspace(0.05, TWO_PI - 0.05, 37)
    np.testing.assert_allclose(fo.abel_partial_sum(a, t, n), fo.cosine_eval(a, t, n), atol=1e-10)


# -- differences -------------------------------------------------------------------


def test_inverse_square_weights_flat():
    k = np.arange(1, 10**5)
    np.testing.assert_allclose(fo.diff2_weighted(fo.power_law(2.0), k).d2k2a, 0.0, atol=1e-9)


def test_concave_weights_k18():
    k = np.arange(1, 10**6)
    assert np.all(fo.diff2_weighted(fo.power_law(1.8), k).d2k2a < 0)


def test_cubic_decay_trend():
    k = np.geomspace(1, 10**5, 200).astype(int)
    k = np.unique(k)
    trend = k.astype(float) ** 3 * np.abs(fo.diff2_weighted(fo.power_law(3.0), k).d2a)
    assert np.all(np.diff(trend) <= 0)
    assert trend[-1] < 1e-8 * trend[0] * 1e4


# -- convexity verdicts ---------------------------------------------------------------


def test_convexity_passes_for_she_weights():
    v = fo.convexity_check(fo.power_law(1.8), 10**5)
    assert v.passed
    assert v.to_dict()["label"] == "checked up to K_max=100000"


def test_convexity_fails_alternating():
    alt = fo.from_callable(lambda k: (-1.0) ** k / np.asarray(k, dtype=float) ** 2, k_max=10**5, decay_rho=1.0)
    v = fo.convexity_check(alt, 10**4)
    assert not v.concave_weights
    assert not v.passed


def test_convexity_inverse_square():
    assert fo.convexity_check(fo.power_law(2.0), 10**5).passed


def test_last_ascent():
    assert fo.last_ascent([5, 4, 3, 3.5, 2, 1]) == 2
    assert fo.last_ascent([3, 2, 1]) == -1


# -- total variation bounds ------------------------------------------------------------


def test_tv_dirac():
    ones = fo.from_callable(lambda k: np.ones(np.shape(k)), k_max=10**5, a0=1.0)
    tv = fo.tv_bound(ones, "l1")
    assert tv.bound == pytest.approx(1.0, abs=1e-12)


def test_tv_quasi_convex_harmonic():
    b = fo.from_callable(lambda k: 1 / np.maximum(k, 1), k_max=10**6, a0=1.0)
    assert abs(fo.tv_bound(b, "quasi_convex").bound - 1.5) <= 1e-8


@pytest.mark.parametrize("tau", [1e-4, 1e-3, 1e-2, 1e-1, 1.0])
def test_tv_gaussian_multiplier_uniform(tau):
    b = fo.from_callable(lambda k: np.exp(-np.asarray(k, dtype=float) ** 2 * tau), k_max=10**5, a0=1.0)
    assert fo.tv_bound(b, "monotone_majorant").bound <= 2.0


def test_tv_diverges():
    slow = fo.from_callable(lambda k: 1 / np.sqrt(np.maximum(k, 1)), k_max=10**5, a0=1.0)
    with pytest.raises(fo.Diverges):
        fo.tv_bound(slow, "l1")


# -- kernels ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [0, 1, 7, 100])
def test_dirichlet_origin(n):
    assert fo.dirichlet(n, 0.0) == pytest.approx(2 * n + 1)


def test_dirichlet_and_fejer_sums():
    t = np.linspace(0.1, 6.0, 40)
    direct = 1 + 2 * sum(np.cos(k * t) for k in range(1, 9))
    np.testing.assert_allclose(fo.dirichlet(8, t), direct, atol=1e-12)
    np.testing.assert_allclose(fo.fejer_discrete(8, t), sum(fo.dirichlet(j, t) for j in range(9)), atol=1e-11)


def test_fejer_cont_nonnegative_and_limit(rng):
    xi = rng.uniform(0, 50, 1000)
    x = rng.uniform(-5, 5, 1000)
    assert np.all(fo.fejer_cont(xi, x) >= 0)
    assert fo.fejer_cont(3.0, 1e-9) == pytest.approx(4.5, rel=1e-12)
    assert fo.fejer_cont(3.0, 0.0) == pytest.approx(4.5, rel=1e-12)


# -- Hölder exponent --------------------------------------------------------------------


def _k_samples(exponent):
    t = np.linspace(0, TWO_PI, 2**10 + 1)
    return fo.cosine_eval(fo.power_law(exponent), t, 2**12)


@pytest.mark.parametrize("exponent,target,tol", [(1.5, 0.5, 0.07), (1.8, 0.8, 0.07), (2.0, 1.0, 0.1)])
def test_holder_from_coefficients(exponent, target, tol):
    assert abs(fo.holder_estimate(_k_samples(exponent)) - target) <= tol


def test_holder_linear():
    assert fo.holder_estimate(np.linspace(0, 3, 1025)) == pytest.approx(1.0, abs=1e-9)


def test_holder_bad_grid():
    with pytest.raises(fo.DegenerateFit):
        fo.holder_estimate(np.zeros(100))


@pytest.mark.parametrize("rho", [1.25, 1.6, 2.0])
def test_sobolev_crosscheck(rho):
    est = fo.holder_estimate(_k_samples(1 + 1 / rho))
    # every exponent below 1/rho is attained, up to the finite-grid tolerance
    assert est >= 1 / rho - 0.07


# -- spectral densities -----------------------------------------------------------------


def test_indicator_gives_sinc():
    f = fo.indicator_density(0.5, 1.0)
    x = np.array([0.3, 1.0, 2.5, 7.0])
    np.testing.assert_allclose([fo.spectral_cov(f, v) for v in x], np.sin(x) / x, atol=1e-9)


def test_fractional_ou_small_scale():
    f = fo.fractional_ou_density(0.4, 1.0)
    t = 2.0 ** -np.arange(4, 11)
    r = np.array([fo.spectral_sigma2(f, v) for v in t]) / t**0.8
    assert r.min() > 0 and r.max() / r.min() < 1.5


def test_whole_line_she_slope():
    f = fo.whole_line_she_density(0.9, 1.0)
    t = 2.0 ** -np.arange(4, 11)
    s2 = np.array([fo.spectral_sigma2(f, v) for v in t])
    assert abs(fo.loglog_fit(t, s2).slope - 0.8) <= 0.1


def test_density_must_be_integrable():
    with pytest.raises(ValueError):
        fo.SpectralDensity(lambda x: np.ones_like(x), decay=0.5)


def test_probe_fractional_ou():
    detected, x0, vals = fo.fejer_convexity_probe(fo.fractional_ou_density(0.4, 1.0), np.linspace(0.05, 2.0, 12))
    assert detected and x0 > 0


def test_probe_whole_line_she():
    _, _, vals = fo.fejer_convexity_probe(fo.whole_line_she_density(0.9, 1.0), np.linspace(0.05, 0.5, 6))
    assert np.all(vals <= 1e-9)


def test_probe_gaussian():
    detected, x0, vals = fo.fejer_convexity_probe(fo.gaussian_density(1.0), np.linspace(0.05, 0.5, 5))
    assert not detected and vals[0] > 0
