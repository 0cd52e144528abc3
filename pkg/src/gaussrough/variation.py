"""One- and two-dimensional variation functionals on grids.

Two-dimensional values use the mixed power sum

    V = ( sum_j ( sum_i |R(cell_i x cell'_j)|^γ )^{ρ/γ} )^{1/ρ},

with the inner (γ) sum over a horizontal dissection and the outer (ρ) sum over
a vertical one.  Exact mode maximises over all sub-dissections of the grid:
horizontal subsets are enumerated, and for each subset the vertical optimum
is a longest-path dynamic program, since the outer weight of a vertical cell
only depends on its two endpoints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .covariance import CovarianceModel, Interval, Rectangle, gram_rect, increment_matrix
from .fitting import DegenerateFit, RateFit, loglog_fit

MAX_EXACT = 12
# vplus exact mode is a polynomial dynamic program, so it tolerates larger grids
MAX_EXACT_DP = 129
MODES = ("exact", "lower", "greedy")
REGIONS = ("square", "U", "L", "D")


class TooLargeForExact(ValueError):
    pass


class BadExponent(ValueError):
    pass


@dataclass(frozen=True)
class Dissection:
    points: tuple

    def __init__(self, points):
        pts = tuple(float(p) for p in points)
        if len(pts) < 2:
            raise ValueError("a dissection needs at least two points")
        if any(b <= a for a, b in zip(pts[:-1], pts[1:])):
            raise ValueError("dissection points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, lo, hi, n):
        return cls(np.linspace(lo, hi, n))

    @property
    def interval(self) -> Interval:
        return Interval(self.points[0], self.points[-1])

    def __len__(self):
        return len(self.points)

    def array(self) -> np.ndarray:
        return np.array(self.points)


@dataclass
class VariationEstimate:
    value: float
    gamma: float
    rho: float
    rect: Optional[Rectangle]
    mode: str
    argmax: Optional[tuple] = None  # (horizontal, vertical) Dissections
    meta: dict = field(default_factory=dict)

    def to_row(self, side=None):
        return {"side": side, "value": self.value, "mode": self.mode, "gamma": self.gamma, "rho": self.rho}


def _check_exponents(*ps):
    for p in ps:
        if not (p >= 1 and math.isfinite(p)):
            raise BadExponent(f"exponents must be finite and >= 1, got {p}")


# ---------------------------------------------------------------------------
# one-dimensional p-variation
# ---------------------------------------------------------------------------


def pvar_power_dist(D: np.ndarray, p: float) -> float:
    """``sup Σ D[t_i, t_{i+1}]^p`` over increasing index chains from 0 to n-1.

    ``D`` is any non-negative pairwise cost; for samples it is ``|x_j - x_i|``.
    """
    n = D.shape[0]
    W = np.abs(D) ** p
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + W[:j, j])
    return float(best[-1])


def pvar_1d(samples, p: float) -> float:
    """Exact p-variation of a sampled path over sub-dissections of its grid."""
    _check_exponents(p)
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) < 2:
        raise ValueError("need at least two samples")
    if p == 1:
        return float(np.sum(np.linalg.norm(np.diff(x, axis=0), axis=1)))
    D = np.linalg.norm(x[None, :, :] - x[:, None, :], axis=2)
    return pvar_power_dist(D, p) ** (1 / p)


# ---------------------------------------------------------------------------
# two-dimensional mixed variation on a grid function
# ---------------------------------------------------------------------------


def _power_sum(inc: np.ndarray, gamma: float, rho: float) -> float:
    """Outer-ρ / inner-γ power sum of a cell matrix ``inc[i, j]``, powered by ρ."""
    inner = np.sum(np.abs(inc) ** gamma, axis=0)
    return float(np.sum(inner ** (rho / gamma)))


def mixed_power(F: np.ndarray, I, J, gamma: float, rho: float) -> float:
    """``V^ρ`` for the sub-dissections with grid indices ``I`` (rows) and ``J`` (columns)."""
    sub = F[np.ix_(I, J)]
    return _power_sum(increment_matrix(sub), gamma, rho)


def _vertical_dp(F_sub: np.ndarray, gamma: float, rho: float):
    """Best vertical chain for fixed rows; returns (value^ρ, chain indices)."""
    D = np.diff(F_sub, axis=0)  # (h-1, nv)
    nv = F_sub.shape[1]
    # W[a, b] = (Σ_i |D[i, b] - D[i, a]|^γ)^{ρ/γ}
    diff = D[:, None, :] - D[:, :, None]
    W = np.sum(np.abs(diff) ** gamma, axis=0) ** (rho / gamma)
    best = np.full(nv, -np.inf)
    prev = np.zeros(nv, dtype=int)
    best[0] = 0.0
    for b in range(1, nv):
        cand = best[:b] + W[:b, b]
        a = int(np.argmax(cand))
        best[b], prev[b] = cand[a], a
    chain = [nv - 1]
    while chain[-1] != 0:
        chain.append(prev[chain[-1]])
    return float(best[-1]), chain[::-1]


def _exact(F: np.ndarray, gamma: float, rho: float):
    nh = F.shape[0]
    best, arg = -1.0, None
    interior = range(1, nh - 1)
    for r in range(nh - 1):
        for subset in itertools.combinations(interior, r):
            I = [0, *subset, nh - 1]
            val, J = _vertical_dp(F[I, :], gamma, rho)
            if val > best:
                best, arg = val, (I, J)
    return best, arg


def _greedy(F: np.ndarray, gamma: float, rho: float):
    nh, nv = F.shape
    I, J = list(range(nh)), list(range(nv))
    cur = mixed_power(F, I, J, gamma, rho)
    while True:
        best_gain, best_move = 0.0, None
        for axis, n, sel in ((0, nh, I), (1, nv, J)):
            for idx in range(1, n - 1):
                trial = sorted(set(sel) ^ {idx})
                val = mixed_power(F, trial if axis == 0 else I, J if axis == 0 else trial, gamma, rho)
                gain = val - cur
                if gain > best_gain * (1 + 1e-12) + 1e-15 * max(1.0, cur):
                    best_gain, best_move = gain, (axis, trial, val)
        if best_move is None:
            return cur, (I, J)
        axis, trial, cur = best_move
        if axis == 0:
            I = trial
        else:
            J = trial


def mixed_var_matrix(F, gamma: float, rho: float, mode: str = "lower", max_exact: int = MAX_EXACT):
    """Mixed (γ,ρ)-variation of a grid function ``F[i, j]``.

    Returns ``(value, (rows, cols))`` with the maximising grid indices.
    """
    _check_exponents(gamma, rho)
    F = np.asarray(F, dtype=float)
    nh, nv = F.shape
    if nh < 2 or nv < 2:
        raise ValueError("grid function needs at least two points per axis")
    if mode == "lower":
        arg = (list(range(nh)), list(range(nv)))
        val = _power_sum(increment_matrix(F), gamma, rho)
    elif mode == "exact":
        if nh > max_exact or nv > max_exact:
            raise TooLargeForExact(f"exact mode allows at most {max_exact} points per axis")
        val, arg = _exact(F, gamma, rho)
    elif mode == "greedy":
        val, arg = _greedy(F, gamma, rho)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return max(val, 0.0) ** (1 / rho), arg


def _as_dissection(g, iv: Interval) -> Dissection:
    if isinstance(g, Dissection):
        d = g
    elif isinstance(g, (int, np.integer)):
        d = Dissection.uniform(iv.lo, iv.hi, int(g))
    else:
        d = Dissection(g)
    if abs(d.points[0] - iv.lo) > 1e-12 or abs(d.points[-1] - iv.hi) > 1e-12:
        raise ValueError("grid must span the rectangle side")
    return d


def mixed_var(
    m: CovarianceModel,
    r: Rectangle,
    grid_h,
    grid_v,
    gamma: float,
    rho: float,
    mode: str = "lower",
    max_exact: int = MAX_EXACT,
) -> VariationEstimate:
    """Mixed (γ,ρ)-variation of the model covariance over a rectangle.

    ``grid_h`` and ``grid_v`` are Dissections, point sequences or point counts
    (equispaced).
    """
    _check_exponents(gamma, rho)
    gh, gv = _as_dissection(grid_h, r.s), _as_dissection(grid_v, r.u)
    F = gram_rect(m, gh.array(), gv.array())
    val, (I, J) = mixed_var_matrix(F, gamma, rho, mode, max_exact)
    arg = (Dissection(gh.array()[I]), Dissection(gv.array()[J]))
    return VariationEstimate(val, gamma, rho, r, mode, arg)


# ---------------------------------------------------------------------------
# region variants
# ---------------------------------------------------------------------------


def _region_slice(region: str, a: int, b: int, n: int):
    if region == "square":
        return 0, n - 1
    if region == "U":
        return 0, a
    if region == "L":
        return b, n - 1
    if region == "D":
        return a, b
    raise ValueError(f"unknown region {region!r}")


def vplus_matrix(F, region: str, gamma: float, rho: float, mode: str = "exact"):
    """Region variant on a square grid function ``F`` (same grid on both axes).

    For each outer cell ``[p_a, p_b]`` the inner quantity is the γ-variation
    power of ``x -> F[x, b] - F[x, a]`` over the region's interval.  Exact
    mode takes both suprema by dynamic programming; lower mode uses the full
    grid for both.
    """
    _check_exponents(gamma, rho)
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    if F.shape != (n, n):
        raise ValueError("region variants need a square grid function")
    if mode == "lower":
        total = 0.0
        for a in range(n - 1):
            lo, hi = _region_slice(region, a, a + 1, n)
            f = F[lo : hi + 1, a + 1] - F[lo : hi + 1, a]
            total += float(np.sum(np.abs(np.diff(f)) ** gamma)) ** (rho / gamma)
        return total ** (1 / rho)
    if mode != "exact":
        raise ValueError("region variants support exact and lower modes")
    if n > MAX_EXACT_DP:
        raise TooLargeForExact(f"region variants allow at most {MAX_EXACT_DP} grid points")
    W = np.zeros((n, n))
    for a in range(n - 1):
        for b in range(a + 1, n):
            lo, hi = _region_slice(region, a, b, n)
            if hi <= lo:
                continue
            f = F[lo : hi + 1, b] - F[lo : hi + 1, a]
            W[a, b] = pvar_power_dist(f[None, :] - f[:, None], gamma) ** (rho / gamma)
    best = np.zeros(n)
    for b in range(1, n):
        best[b] = np.max(best[:b] + W[:b, b])
    return float(best[-1]) ** (1 / rho)


def vplus(m: CovarianceModel, interval: Interval, region: str, gamma: float, rho: float, grid, mode="exact"):
    if region not in REGIONS:
        raise ValueError(f"unknown region {region!r}")
    g = _as_dissection(grid, interval)
    F = gram_rect(m, g.array(), g.array())
    val = vplus_matrix(F, region, gamma, rho, mode)
    return VariationEstimate(val, gamma, rho, Rectangle(interval, interval), mode, meta={"region": region})


def concatenation_constant(gamma: float, rho: float) -> float:
    """Constant in ``V⁺(square) <= C (V⁺(U) + V⁺(D) + V⁺(L))``.

    Splitting a cell into three costs ``3^{1-1/γ}`` in the inner sum and
    ``3^{max(0, 1/γ - 1/ρ)}`` when re-grouping the outer sum, so ``C <= 3``.
    """
    return 3.0 ** ((gamma - 1) / gamma + max(0.0, 1 / gamma - 1 / rho))


def sigma2_cells(F: np.ndarray) -> np.ndarray:
    """On-diagonal cell increments ``F[a+1,a+1] - 2F[a,a+1] + F[a,a]``."""
    d = np.diag(F)
    off = np.diag(F, 1)
    return d[1:] - 2 * off + d[:-1]


# ---------------------------------------------------------------------------
# scaling experiments
# ---------------------------------------------------------------------------


def scaling_fit(
    m: CovarianceModel,
    gamma: float,
    rho: float,
    squares: Sequence,
    grid_n: int = 32,
) -> RateFit:
    """Slope of log V_{γ,ρ}([s,t]²) against log (t - s), lower mode."""
    if len(squares) < 4:
        raise DegenerateFit("need at least four squares")
    sides, vals = [], []
    for sq in squares:
        if isinstance(sq, Rectangle):
            iv = sq.s
        elif isinstance(sq, Interval):
            iv = sq
        else:
            iv = Interval(*sq)
        est = mixed_var(m, Rectangle(iv, iv), grid_n, grid_n, gamma, rho, "lower")
        sides.append(iv.length)
        vals.append(est.value)
    return loglog_fit(np.array(sides), np.array(vals))


def dyadic_squares(domain: Interval, levels: Sequence[int], anchor: Optional[float] = None):
    """Squares ``[a, a + |I| 2^{-j}]`` for ``j`` in ``levels``."""
    a = domain.lo if anchor is None else anchor
    return [Interval(a, a + domain.length * 2.0**-j) for j in levels]


# ---------------------------------------------------------------------------
# convolution with discrete measures
# ---------------------------------------------------------------------------


def convolve_rows(F: np.ndarray, masses: dict) -> np.ndarray:
    """``F_μ[i, j] = Σ_m μ_m F[(i - m) mod n, j]`` on a periodic row grid."""
    out = np.zeros_like(F, dtype=float)
    for shift, mass in sorted(masses.items()):
        out += mass * np.roll(F, shift, axis=0)
    return out


def young_check(F: np.ndarray, rows, cols, masses: dict, gamma: float, rho: float, mode="exact"):
    """Both sides of the convolution inequality on a periodic grid function.

    Returns ``(lhs, rhs)`` with lhs the variation of ``F_μ`` on the
    sub-grid ``rows x cols`` and rhs ``‖μ‖_TV`` times the largest variation
    of ``F`` over the shifted sub-grids.
    """
    rows, cols = list(rows), list(cols)
    n = F.shape[0]
    Fm = convolve_rows(F, masses)
    lhs, _ = mixed_var_matrix(Fm[np.ix_(rows, cols)], gamma, rho, mode)
    tv = float(sum(abs(v) for v in masses.values()))
    sup = 0.0
    for shift in sorted(masses):
        shifted = [(i - shift) % n for i in rows]
        v, _ = mixed_var_matrix(F[np.ix_(shifted, cols)], gamma, rho, mode)
        sup = max(sup, v)
    return lhs, tv * sup
