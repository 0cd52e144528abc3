import numpy as np
import pytest

from gaussrough import covariance as cv
from gaussrough import criteria as cr
from gaussrough import variation as vr
from gaussrough.covariance import Interval, Rectangle
from gaussrough.fourier import power_law


def grid(n=33):
    return np.linspace(0, 1, n)


# -- Jain-Monrad -------------------------------------------------------------------


@pytest.mark.parametrize("H", [0.2, 0.3, 0.45])
def test_jm_exact_for_fbm(H):
    assert cr.jm_constant(cv.fbm(H), 1 / (2 * H), grid()) == pytest.approx(1.0, rel=1e-12)


def test_jm_wrong_rho_fails():
    C, ok, ev = cr.jm_check(cv.fbm(0.3), 1.0)
    assert not ok
    assert ev["constants"][-1] > ev["constants"][0]


def test_jm_bifbm_bound():
    H, K = 0.6, 0.7
    C, ok, _ = cr.jm_check(cv.bifbm(H, K), 1 / (2 * H * K))
    assert ok and C <= 2 ** (1 - K) + 1e-12


# -- sign condition -------------------------------------------------------------------


def test_sign_fbm_rough_full_domain():
    assert cr.sign_check_b2(cv.fbm(0.3), grid()) == pytest.approx(1.0)


def test_sign_rfs_positive():
    m = cv.rfs(power_law(1.8), cv.TruncationPolicy(n_cov=1024))
    assert cr.sign_check_b2(m, np.linspace(0, 2 * np.pi, 33)) > 0


def test_sign_fbm_smooth_still_passes_on_squares():
    assert cr.sign_check_b2(cv.fbm(0.7), grid()) > 0
    assert cr.route(cv.fbm(0.7)) == ("A", 1.0)


# -- masses -----------------------------------------------------------------------------


def test_masses_brownian_zero():
    plus, minus, ev = cr.mass_estimates(cv.fbm(0.5))
    assert plus < 1e-12 and minus < 1e-12
    assert ev["mu_minus_trend"] == "zero"


def test_masses_smooth_fbm():
    plus, minus, ev = cr.mass_estimates(cv.fbm(0.7))
    assert minus < 1e-12
    assert ev["mu_plus_trend"] == "converging"
    # on the full square, V_1 = sigma^2 = mu_plus + diagonal mass
    assert 0 < plus < cv.sigma2(cv.fbm(0.7), 0, 1)


def test_masses_rough_fbm_diverge():
    _, _, ev = cr.mass_estimates(cv.fbm(0.3))
    assert ev["mu_minus_trend"] == "diverging"


# -- routing ----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "model,part,rho",
    [
        (cv.fbm(0.7), "A", 1.0),
        (cv.fbm(0.3), "B", 5 / 3),
        (cv.bifbm(0.8, 0.7), "A", 1.0),
        (cv.bifbm(0.6, 0.7), "B", 1 / 0.84),
        (cv.she_dirichlet(0.9), "B", 1.25),
        (cv.brownian_bridge(), "A", 1.0),
    ],
    ids=lambda x: getattr(x, "tag", str(x)),
)
def test_route(model, part, rho):
    p, r = cr.route(model)
    assert p == part and r == pytest.approx(rho)


def test_stationary_f_needs_regime():
    m = cv.stationary_f(lambda x: np.abs(x) ** 0.8, (0, 1))
    with pytest.raises(cr.UnknownKind):
        cr.route(m)


def test_classify_fbm_rough():
    rep = cr.classify(cv.fbm(0.3))
    assert rep.route == "B" and rep.passed
    assert rep.verdicts["B.iii"]["mu_minus_trend"] == "diverging"
    d = rep.to_dict()
    assert set(d) >= {"model", "route", "rho_used", "verdicts", "jm_constant", "h_detected", "passed"}


def test_classify_deterministic_and_refinement_stable():
    a = cr.classify(cv.fbm(0.7), grid_n=65).to_dict()
    b = cr.classify(cv.fbm(0.7), grid_n=65).to_dict()
    c = cr.classify(cv.fbm(0.7), grid_n=129).to_dict()
    assert a == b
    assert a["route"] == c["route"]
    assert {k: v["status"] for k, v in a["verdicts"].items()} == {k: v["status"] for k, v in c["verdicts"].items()}


def test_part_a_conclusion(rng):
    for m in (cv.fbm(0.7), cv.bifbm(0.8, 0.7), cv.fbm(0.5)):
        _, minus, _ = cr.mass_estimates(m)
        for _ in range(5):
            s, t = np.sort(rng.uniform(0, 1, 2))
            est = vr.mixed_var(m, Rectangle(Interval(s, t), Interval(s, t)), 32, 32, 1, 1, "lower")
            assert est.value <= cv.sigma2(m, s, t) + 2 * minus + 1e-8


def test_part_b_scaling():
    for m in (cv.fbm(0.3), cv.bifbm(0.6, 0.7)):
        _, rho = cr.route(m)
        fit = vr.scaling_fit(m, 1, rho, vr.dyadic_squares(m.domain, range(1, 7)), 32)
        assert abs(fit.slope - 1 / rho) <= 0.1


# -- conditional variance hypotheses -------------------------------------------------------


def test_chlt_power():
    m = cv.stationary_f(lambda x: np.abs(x) ** 0.8, (0, 1), 1.25, "concave")
    rep = cr.chlt_check(m)
    assert rep.passed
    assert rep.verdicts["derivative_positive"]["backward"] == pytest.approx(0.8, abs=1e-3)


def test_chlt_ou():
    m = cv.stationary_f(lambda x: 1 - np.exp(-np.abs(x)), (0, 1), 1.0, "concave")
    rep = cr.chlt_check(m)
    assert rep.passed
    assert rep.verdicts["derivative_positive"]["forward"] == pytest.approx(np.exp(-1), rel=1e-3)


@pytest.mark.parametrize("m", [cv.ou(1.0), cv.fractional_ou(0.4, 1.0)], ids=["ou", "fractional_ou"])
def test_chlt_stationary_kinds(m):
    # F(h) = 2(K(0) - K(h)) has to be evaluated just past T
    rep = cr.chlt_check(m)
    assert rep.passed
    if m.kind == "OU":
        assert rep.verdicts["derivative_positive"]["forward"] == pytest.approx(2 * np.exp(-1), rel=1e-3)


def test_chlt_smooth_fails():
    m = cv.stationary_f(lambda x: np.asarray(x, dtype=float) ** 2, (0, 1), 1.0, "convex")
    rep = cr.chlt_check(m)
    assert rep.verdicts["disjoint_increments_nonpositive"]["status"] == "fail"
    assert rep.verdicts["concave"]["status"] == "fail"


def test_chlt_needs_stationary_increments():
    with pytest.raises(cr.NotStationary):
        cr.chlt_check(cv.fbm(0.3))
