import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussrough import roughpath as rp


def random_path(rng, n, d, scale=0.3):
    return np.cumsum(np.r_[np.zeros((1, d)), scale * rng.standard_normal((n - 1, d))], axis=0)


def riemann_area(path, refine=200):
    """∮ ½(x¹dx² − x²dx¹) on a finely resampled piecewise-linear path."""
    pts = [path[0]]
    for a, b in zip(path[:-1], path[1:]):
        s = np.linspace(0, 1, refine + 1)[1:, None]
        pts.extend(a + s * (b - a))
    p = np.array(pts)
    mid = 0.5 * (p[1:] + p[:-1])
    dx = np.diff(p, axis=0)
    return 0.5 * np.sum(mid[:, 0] * dx[:, 1] - mid[:, 1] * dx[:, 0])


# -- algebra ----------------------------------------------------------------------


def test_texp_levels():
    v = np.array([0.3, -1.2, 0.5])
    g = rp.texp(v, 3)
    np.testing.assert_allclose(g.level(2), np.outer(v, v) / 2, atol=1e-15)
    np.testing.assert_allclose(g.level(3), np.einsum("i,j,k->ijk", v, v, v) / 6, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(1, 3), elements=st.floats(-2, 2)), st.integers(1, 5))
def test_log_exp_inverse(v, N):
    g = rp.texp(v, N)
    lg = rp.tlog(g)
    np.testing.assert_allclose(lg.levels[1], v, atol=1e-13)
    for x in lg.levels[2:]:
        np.testing.assert_allclose(x, 0, atol=1e-13)
    ident = rp.tensor_mul(g, rp.texp(-v, N))
    assert ident.max_abs_diff(rp.TruncatedTensor.identity(len(v), N)) <= 1e-13


def test_caps():
    with pytest.raises(rp.DimensionMismatch):
        rp.texp(np.zeros(5), 2)
    with pytest.raises(rp.DimensionMismatch):
        rp.texp(np.zeros(2), 6)
    with pytest.raises(rp.DimensionMismatch):
        rp.tensor_mul(rp.texp(np.zeros(2), 2), rp.texp(np.zeros(3), 2))


def test_group_closure(rng):
    for _ in range(30):
        a = rp.signature(random_path(rng, 6, 3), 2).end()
        b = rp.signature(random_path(rng, 6, 3), 2).end()
        assert rp.lie_defect(rp.tensor_mul(a, b)) <= 1e-12
        assert rp.lie_defect(rp.inverse(a)) <= 1e-12


# -- signatures ------------------------------------------------------------------


def test_single_segment():
    v = np.array([1.0, -0.5])
    rec = rp.signature(np.array([[0, 0], v]), 4)
    assert rec.end().max_abs_diff(rp.texp(v, 4)) <= 1e-15


@pytest.mark.parametrize("N,d", [(1, 1), (2, 2), (3, 3), (4, 3), (4, 2)])
def test_chen_identity(N, d, rng):
    x = random_path(rng, 51, d)
    whole = rp.signature(x, N).end()
    first = rp.signature(x[:26], N).end()
    second = rp.signature(x[25:], N).end()
    assert whole.max_abs_diff(rp.tensor_mul(first, second)) <= 1e-10
    rec = rp.signature(x, N)
    assert rec.increment(10, 40).max_abs_diff(rp.signature(x[10:41], N).end()) <= 1e-10


def test_reparametrisation_invariance(rng):
    x = random_path(rng, 20, 2)
    t = np.cumsum(rng.uniform(0.1, 2, 20))
    a = rp.signature(x, 3).end()
    b = rp.signature(x, 3, times=t).end()
    assert a.max_abs_diff(b) <= 1e-12


def test_unit_square_levy_area():
    loop = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
    rec = rp.signature(loop, 2)
    np.testing.assert_allclose(rec.end().levels[1], 0, atol=1e-15)
    area = rp.levy_area(rec)[0, 1]
    assert abs(area - 1) <= 1e-12
    assert abs(area - riemann_area(loop)) <= 1e-12
    assert rp.levy_area(rp.signature(loop[::-1], 2))[0, 1] == pytest.approx(-1, abs=1e-12)


def test_scalar_path_has_no_area(rng):
    x = random_path(rng, 30, 1)
    rec = rp.signature(x, 2)
    assert rec.end().level(2)[0, 0] == pytest.approx(0.5 * (x[-1, 0] - x[0, 0]) ** 2, abs=1e-12)
    assert np.all(rp.levy_area(rec) == 0)


def test_batched_signature(rng):
    x = np.stack([random_path(rng, 17, 2) for _ in range(4)])
    rec = rp.signature(x, 3)
    for b in range(4):
        assert rec.end()[b].max_abs_diff(rp.signature(x[b], 3).end()) <= 1e-14


# -- norm ----------------------------------------------------------------------


def test_hnorm_values():
    assert rp.hnorm(rp.texp(np.array([0.3, 0.4]), 2)) == pytest.approx(0.5, abs=1e-15)
    assert rp.hnorm(rp.TruncatedTensor.identity(2, 3)) == 0.0


@settings(max_examples=40, deadline=None)
@given(arrays(float, 8, elements=st.floats(-1, 1)), st.floats(0.1, 5.0))
def test_dilation_homogeneity(v, lam):
    g = rp.signature(v.reshape(4, 2), 3).end()
    assert rp.hnorm(rp.dilation(g, lam)) == pytest.approx(lam * rp.hnorm(g), rel=1e-12, abs=1e-12)


def test_dilation_by_two(rng):
    g = rp.signature(random_path(rng, 9, 3), 4).end()
    assert rp.hnorm(rp.dilation(g, 2.0)) == pytest.approx(2 * rp.hnorm(g), rel=1e-12)


def test_hnorm_subadditive(rng):
    for _ in range(200):
        a = rp.signature(random_path(rng, 5, 2, 1.0), 3).end()
        b = rp.signature(random_path(rng, 5, 2, 1.0), 3).end()
        assert rp.hnorm(rp.tensor_mul(a, b)) <= rp.hnorm(a) + rp.hnorm(b) + 1e-12


# -- distances ----------------------------------------------------------------------


def _records(rng, k, n=17, d=2, N=2):
    g = np.linspace(0, 1, n)
    return [rp.signature(random_path(rng, n, d), N, g, beta=0.3) for _ in range(k)]


def test_distance_to_self_is_zero(rng):
    (X,) = _records(rng, 1)
    assert rp.dist_homog(X, X, "holder", 0.3) == 0.0
    assert rp.dist_inhomog(X, X, 0.3) == 0.0
    assert rp.dist_homog(X, X, "pvar", p=3.0) == 0.0


def test_distance_to_identity_is_norm(rng):
    (X,) = _records(rng, 1)
    zero = rp.identity_record(X.grid, 2, 2)
    I, J = rp.pair_indices(X.n)
    h = np.array([rp.hnorm(X.increment(i, j)) for i, j in zip(I, J)])
    norm = np.max(h / (X.grid[J] - X.grid[I]) ** 0.3)
    assert rp.dist_homog(X, zero, "holder", 0.3) == pytest.approx(norm, rel=1e-12)


def test_straight_lines_level_one():
    g = np.linspace(0, 1, 9)
    v, w = np.array([1.0, 2.0]), np.array([0.5, -1.0])
    X = rp.signature(np.outer(g, v), 2, g)
    Y = rp.signature(np.outer(g, w), 2, g)
    beta = 0.25
    # level 1 of the inhomogeneous distance: sup |v - w| h / h^beta is attained at h = 1
    level1 = np.linalg.norm(v - w)
    d = rp.dist_inhomog(X, Y, beta)
    level2 = np.linalg.norm(np.outer(v, v) / 2 - np.outer(w, w) / 2)
    assert d == pytest.approx(max(level1, level2), rel=1e-12)


def test_metric_axioms(rng):
    for _ in range(20):
        X, Y, Z = _records(rng, 3)
        xy = rp.dist_homog(X, Y, "holder", 0.3)
        assert xy == pytest.approx(rp.dist_homog(Y, X, "holder", 0.3), rel=1e-12)
        assert xy > 0
        assert rp.dist_homog(X, Z, "holder", 0.3) <= xy + rp.dist_homog(Y, Z, "holder", 0.3) + 1e-9


def test_grid_mismatch(rng):
    X = rp.signature(random_path(rng, 9, 2), 2)
    Y = rp.signature(random_path(rng, 10, 2), 2)
    with pytest.raises(rp.GridMismatch):
        rp.dist_inhomog(X, Y, 0.3)


def test_dyadic_pairs():
    i, j = rp.pair_indices(9, "dyadic")
    assert len(i) == 1 + 2 + 4 + 8
    assert set(j - i) == {1, 2, 4, 8}
    with pytest.raises(rp.GridMismatch):
        rp.pair_indices(10, "dyadic")
