"""Acceptance criteria 1-11, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (lines are printed even when
output is captured) or directly with ``python tests/test_acceptance.py``.
"""

import itertools
import math
import sys
import time

import numpy as np
import pytest

from gaussrough import covariance as cv
from gaussrough import criteria as cr
from gaussrough import fourier as fo
from gaussrough import gaussian as gs
from gaussrough import roughpath as rp
from gaussrough import she
from gaussrough import variation as vr
from gaussrough.covariance import Interval, Rectangle

_capsys_ref = {}


@pytest.fixture(autouse=True)
def _terminal(capsys):
    _capsys_ref["c"] = capsys
    yield
    _capsys_ref.pop("c", None)


def report(n: int, ok: bool, detail: str, started: float):
    line = f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}  ({time.time() - started:.1f}s)"
    cap = _capsys_ref.get("c")
    if cap is not None:
        with cap.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. Brownian exact variation
# ---------------------------------------------------------------------------


def test_criterion_01_brownian_exact_variation():
    t0 = time.time()
    m = cv.fbm(0.5)
    sq = Rectangle(Interval(0, 1), Interval(0, 1))
    rng = np.random.default_rng(1)
    worst = 0.0
    cases = 0
    for n in range(2, 13):
        grids = [np.linspace(0, 1, n)]
        for _ in range(3):
            inner = np.sort(rng.uniform(0, 1, n - 2))
            grids.append(np.r_[0.0, inner, 1.0])
        for gh, gv in itertools.product(grids, grids[:2]):
            v = vr.mixed_var(m, sq, gh, gv, 1, 1, "exact").value
            worst = max(worst, abs(v - 1))
            cases += 1
    report(1, worst <= 1e-9, f"max |V1 - 1| = {worst:.2e} over {cases} grid pairs with <= 12 points", t0)


# ---------------------------------------------------------------------------
# 2. Hölder-controlled slopes
# ---------------------------------------------------------------------------


def test_criterion_02_holder_controlled_slopes():
    t0 = time.time()
    cases = [(cv.fbm(H), max(1.0, 1 / (2 * H))) for H in (0.5, 0.4, 0.3)]
    cases.append((cv.bifbm(0.6, 0.7), 1 / 0.84))
    # a long cutoff keeps the truncation from flattening the smallest squares
    cases.append((cv.rfs(fo.power_law(1.8), cv.TruncationPolicy(n_cov=65536)), 1.25))
    parts, ok = [], True
    for m, rho in cases:
        fit = vr.scaling_fit(m, 1, rho, vr.dyadic_squares(m.domain, range(1, 7)), grid_n=32)
        good = abs(fit.slope - 1 / rho) <= 0.1
        ok &= good
        parts.append(f"{m.tag.split('(')[0]}{m.params.get('H', '')}:{fit.slope:.3f}/{1 / rho:.3f}")
    report(2, ok, "slope/target " + ", ".join(parts), t0)


# ---------------------------------------------------------------------------
# 3. Inequality suites
# ---------------------------------------------------------------------------


def _random_instance(rng):
    """Small symmetric grid function: a random Gram matrix or a model covariance."""
    n = int(rng.integers(3, 7))
    if rng.random() < 0.5:
        A = rng.standard_normal((n, n + 1))
        return A @ A.T
    m = [cv.fbm(float(rng.uniform(0.2, 0.8))), cv.bifbm(0.6, 0.7), cv.brownian_bridge()][int(rng.integers(3))]
    g = np.r_[0.0, np.sort(rng.uniform(0, 1, n - 2)), 1.0]
    return cv.gram(m, g, check_psd=False)


def test_criterion_03_inequality_suites():
    t0 = time.time()
    rng = np.random.default_rng(3)
    tol = 1e-9
    viol = {"ordering": 0, "V<=V+": 0, "triangle": 0, "young": 0}
    for _ in range(200):
        F = _random_instance(rng)
        g, r = rng.uniform(1, 3, 2)
        v, _ = vr.mixed_var_matrix(F, g, r, "exact")
        hi, _ = vr.mixed_var_matrix(F, max(g, r), max(g, r), "exact")
        lo, _ = vr.mixed_var_matrix(F, min(g, r), min(g, r), "exact")
        viol["ordering"] += not (hi <= v + tol and v <= lo + tol)
        viol["V<=V+"] += not (v <= vr.vplus_matrix(F, "square", g, r) + tol)
    for _ in range(200):
        F1 = _random_instance(rng)
        n = F1.shape[0]
        A = rng.standard_normal((n, n))
        F2 = A @ A.T
        g, r = rng.uniform(1, 3, 2)
        s, _ = vr.mixed_var_matrix(F1 + F2, g, r, "exact")
        a, _ = vr.mixed_var_matrix(F1, g, r, "exact")
        b, _ = vr.mixed_var_matrix(F2, g, r, "exact")
        viol["triangle"] += not (s <= a + b + tol)
    for _ in range(200):
        n = 10
        A = rng.standard_normal((n, n + 1))
        F = A @ A.T
        rows = np.sort(rng.choice(n, int(rng.integers(3, 7)), replace=False))
        cols = np.sort(rng.choice(n, int(rng.integers(3, 7)), replace=False))
        masses = {int(k): float(rng.standard_normal()) for k in rng.choice(n, 3, replace=False)}
        g, r = rng.uniform(1, 3, 2)
        lhs, rhs = vr.young_check(F, rows, cols, masses, g, r)
        viol["young"] += not (lhs <= rhs + tol)
    ok = sum(viol.values()) == 0
    report(3, ok, "violations over 200 instances each: " + ", ".join(f"{k}={v}" for k, v in viol.items()), t0)


# ---------------------------------------------------------------------------
# 4. Cameron-Martin embedding
# ---------------------------------------------------------------------------


def test_criterion_04_cameron_martin_embedding():
    t0 = time.time()
    cases = [(cv.fbm(0.4), 1.25), (cv.fbm(0.3), 1 / 0.6), (cv.rfs(fo.power_law(1.8)), 1.25)]
    parts, ok = [], True
    for m, rho in cases:
        res = gs.embedding_trials(m, rho, n_elements=500, n_points=32, seed=4)
        slack = float(res[:, 2].min())
        ok &= slack >= -1e-9
        parts.append(f"{m.tag}: min slack {slack:.3e}")
    report(4, ok, "; ".join(parts), t0)


# ---------------------------------------------------------------------------
# 5. Rough path algebra
# ---------------------------------------------------------------------------


def test_criterion_05_rough_path_algebra():
    t0 = time.time()
    rng = np.random.default_rng(5)
    chen = 0.0
    for N in range(1, 5):
        for d in range(1, 4):
            for _ in range(5):
                x = np.cumsum(np.r_[np.zeros((1, d)), 0.3 * rng.standard_normal((50, d))], axis=0)
                k = int(rng.integers(1, 50))
                whole = rp.signature(x, N).end()
                split = rp.tensor_mul(rp.signature(x[: k + 1], N).end(), rp.signature(x[k:], N).end())
                chen = max(chen, whole.max_abs_diff(split))

    loop = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
    area = rp.levy_area(rp.signature(loop, 2))[0, 1]
    fine = []
    for a, b in zip(loop[:-1], loop[1:]):
        s = np.linspace(0, 1, 1001)[:-1, None]
        fine.extend(a + s * (b - a))
    fine = np.array(fine + [loop[-1]])
    mid, dx = 0.5 * (fine[1:] + fine[:-1]), np.diff(fine, axis=0)
    riemann = 0.5 * np.sum(mid[:, 0] * dx[:, 1] - mid[:, 1] * dx[:, 0])
    area_err = max(abs(area - 1), abs(area - riemann))

    sym = 0.0
    hom = 0.0
    for _ in range(100):
        a = rp.signature(rng.standard_normal((6, 3)), 2).end()
        b = rp.signature(rng.standard_normal((6, 3)), 2).end()
        sym = max(sym, rp.lie_defect(rp.tensor_mul(a, b)), rp.lie_defect(rp.inverse(a)))
        g = rp.signature(rng.standard_normal((5, 2)), 4).end()
        lam = float(rng.uniform(0.1, 5))
        hom = max(hom, abs(rp.hnorm(rp.dilation(g, lam)) - lam * rp.hnorm(g)))
    ok = chen <= 1e-10 and area_err <= 1e-12 and sym <= 1e-12 and hom <= 1e-12
    detail = f"Chen {chen:.1e}, area err {area_err:.1e}, symmetric part {sym:.1e}, homogeneity {hom:.1e}"
    report(5, ok, detail, t0)


# ---------------------------------------------------------------------------
# 6-8. Monte Carlo rates
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_06_moment_scaling():
    t0 = time.time()
    fit, pts = she.rfs_moment_scaling(fo.power_law(1.8), M=2000, seed=6, scales=(3, 4, 5, 6, 7))
    report(6, fit.slope >= 0.7, f"slope {fit.slope:.3f} (target >= 0.7, r2 {fit.r2:.3f})", t0)


@pytest.mark.slow
def test_criterion_07_truncation_rate():
    t0 = time.time()
    fit, pts = she.rfs_truncation_rate(fo.power_law(1.8), [16, 32, 64, 128, 256], beta=0.05, q=2, M=1000, seed=7)
    report(7, fit.slope >= 0.25, f"L2 rate {fit.slope:.3f} in N (target >= 0.25, {fit.points_used} points)", t0)


@pytest.mark.slow
def test_criterion_08_she_galerkin_and_hyperviscosity():
    t0 = time.time()
    cfg = she.SHEConfig(alpha=0.9, n_modes=1024, x_n=1025, M=1000, seed=8)
    fit, _ = she.galerkin_rate(cfg, [16, 32, 64, 128, 256], beta=0.1, q=2)
    _, pts = she.hyperviscosity_rate(cfg, 2.0, [1e-1, 1e-2, 1e-3, 1e-4], beta=0.1, q=2)
    d = [p.distance for p in pts]
    decreasing = all(a > b for a, b in zip(d, d[1:]))
    ok = fit.slope >= 0.2 and decreasing
    detail = f"Galerkin slope {fit.slope:.3f} (>= 0.2); hyper-viscosity distances " + ", ".join(f"{v:.3f}" for v in d)
    report(8, ok, detail, t0)


# ---------------------------------------------------------------------------
# 9. Conditional variance
# ---------------------------------------------------------------------------


def test_criterion_09_conditional_variance():
    t0 = time.time()
    g = np.linspace(0, 1, 64)
    fbm = cv.fbm(0.4)
    stat = cv.stationary_f(lambda x: np.abs(x) ** 0.8, (0.0, 1.0), 1.25, "concave")
    deriv = 0.8  # F'_-(1) for F(t) = t^0.8
    worst = {"fbm rect": math.inf, "stat rect": math.inf, "stat deriv": math.inf}
    for name, m in (("fbm", fbm), ("stat", stat)):
        C = gs.increment_cov(m, g)
        for i in range(63):
            for j in range(i + 1, 64):
                v = gs.conditional_variance(m, g, g[i], g[j], C=C)
                r = cv.rect_increment(m, Rectangle(Interval(g[i], g[j]), Interval(0, 1)))
                worst[f"{name} rect"] = min(worst[f"{name} rect"], v - r)
                if name == "stat":
                    worst["stat deriv"] = min(worst["stat deriv"], v - deriv * (g[j] - g[i]))
    ok = all(w >= -1e-9 for w in worst.values())
    report(9, ok, "min slack " + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()) + " over 2016 pairs", t0)


# ---------------------------------------------------------------------------
# 10. Classification
# ---------------------------------------------------------------------------


def test_criterion_10_classification():
    t0 = time.time()
    expected = [
        (cv.fbm(0.7), "A", 1.0),
        (cv.fbm(0.3), "B", 5 / 3),
        (cv.bifbm(0.8, 0.7), "A", 1.0),
        (cv.bifbm(0.6, 0.7), "B", 1 / 0.84),
        (cv.she_dirichlet(0.9), "B", 1.25),
    ]
    parts, ok = [], True
    for m, part, rho in expected:
        rep = cr.classify(m)
        good = rep.route == part and abs(rep.rho_used - rho) <= 1e-12
        ok &= good
        parts.append(f"{m.tag}->{rep.route}({rep.rho_used:.3g})")
    _, _, ev = cr.mass_estimates(cv.fbm(0.3))
    flagged = ev["mu_minus_trend"] == "diverging"
    ok &= flagged
    parts.append(f"FBM(0.3) mu_minus {'diverging' if flagged else ev['mu_minus_trend']}")
    report(10, ok, ", ".join(parts), t0)


# ---------------------------------------------------------------------------
# 11. Fourier analytics
# ---------------------------------------------------------------------------


def test_criterion_11_fourier_analytics():
    t0 = time.time()
    conv = {a: fo.convexity_check(fo.power_law(2 * a), 10**6).passed for a in (0.6, 0.75, 0.9, 1.0)}
    t = np.linspace(0, 2 * math.pi, 2**10 + 1)
    hold = {}
    for rho in (1.25, 2.0):
        K = fo.cosine_eval(fo.power_law(1 + 1 / rho), t, 2**12)
        hold[rho] = fo.holder_estimate(K)
    harmonic = fo.from_callable(lambda k: 1 / np.maximum(k, 1), k_max=10**6, a0=1.0)
    tv = fo.tv_bound(harmonic, "quasi_convex").bound
    detected, x0, _ = fo.fejer_convexity_probe(fo.fractional_ou_density(0.4, 1.0), np.linspace(0.05, 2.0, 12))
    ok = (
        all(conv.values())
        and all(abs(hold[r] - 1 / r) <= 0.07 for r in hold)
        and abs(tv - 1.5) <= 1e-8
        and detected
        and x0 > 0
    )
    detail = (
        "convexity "
        + ",".join(f"{a}:{'ok' if v else 'FAIL'}" for a, v in conv.items())
        + "; holder "
        + ",".join(f"rho={r}:{v:.3f}" for r, v in hold.items())
        + f"; tv {tv:.10f}; probe x0={x0:.3f}"
    )
    report(11, ok, detail, t0)


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
