"""Checkers for the variation criteria: on-diagonal control, increment signs,
off-diagonal masses, Part A / Part B routing and the conditional-variance
hypotheses for stationary-increment models.

Every verdict is a finite-grid surrogate and records the grid it used.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import covariance as cov
from .covariance import CovarianceModel, Interval, gram, increment_matrix, sigma2, stationary_kernel
from .fitting import DegenerateFit
from .gaussian import conditional_variance, increment_cov
from .variation import dyadic_squares, mixed_var_matrix, scaling_fit

TOL = 1e-10


class UnknownKind(ValueError):
    pass


class NotStationary(ValueError):
    pass


@dataclass
class ConditionReport:
    model: str
    route: str = ""  # "A" or "B"
    rho_used: float = float("nan")
    verdicts: dict = field(default_factory=dict)
    jm_constant: float = float("nan")
    h_detected: float = float("nan")
    mu_plus_mass: float = float("nan")
    mu_minus_mass: float = float("nan")

    def add(self, name: str, status: str, **evidence):
        self.verdicts[name] = {"status": status, **evidence}

    @property
    def passed(self) -> bool:
        return all(v["status"] != "fail" for v in self.verdicts.values())

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return _jsonable(d)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _grid(m: CovarianceModel, n: int) -> np.ndarray:
    return np.linspace(m.domain.lo, m.domain.hi, n)


# ---------------------------------------------------------------------------
# (JM) condition
# ---------------------------------------------------------------------------


def jm_constant(m: CovarianceModel, rho: float, grid) -> float:
    """``max σ²(s,t) / (t-s)^{1/ρ}`` over grid pairs."""
    t = np.asarray(grid, dtype=float)
    i, j = np.triu_indices(len(t), 1)
    s2 = np.asarray(sigma2(m, t[i], t[j]), dtype=float)
    return float(np.max(s2 / (t[j] - t[i]) ** (1 / rho)))


def jm_check(m: CovarianceModel, rho: float, grid_sizes: Sequence[int] = (17, 33, 65, 129)):
    """Jain-Monrad control with ``ω(s,t) = C (t-s)``.

    Returns ``(C, passed, evidence)``; the check passes when successive
    refinements change C by a factor of at most 1.1.
    """
    if rho < 1:
        raise ValueError("rho must be >= 1")
    cs = [jm_constant(m, rho, _grid(m, n)) for n in grid_sizes]
    ratios = [b / a if a > 0 else math.inf for a, b in zip(cs[:-1], cs[1:])]
    ok = bool(all(math.isfinite(c) for c in cs) and all(r <= 1.1 for r in ratios))
    return cs[-1], ok, {"grid_sizes": list(grid_sizes), "constants": cs, "ratios": ratios}


# ---------------------------------------------------------------------------
# sign condition on nested increments
# ---------------------------------------------------------------------------


def nested_min(m: CovarianceModel, grid) -> np.ndarray:
    """``out[a, b] = min over grid u < v in [t_a, t_b] of R([t_a,t_b] x [u,v])``."""
    t = np.asarray(grid, dtype=float)
    n = len(t)
    inc = increment_matrix(gram(m, t, check_psd=False))
    # P[i, j] = sum of cells [0,i) x [0,j)
    P = np.zeros((n, n))
    P[1:, 1:] = np.cumsum(np.cumsum(inc, axis=0), axis=1)
    out = np.full((n, n), np.inf)
    for a in range(n - 1):
        for b in range(a + 1, n):
            # rows a..b fixed; columns u < v within [a, b]
            col = P[b, :] - P[a, :]  # sum over rows [a,b) of cells [0, j)
            seg = col[a : b + 1]
            diff = seg[None, :] - seg[:, None]
            iu = np.triu_indices(len(seg), 1)
            out[a, b] = float(np.min(diff[iu]))
    return out


def sign_check_b2(m: CovarianceModel, grid, h_candidates: Optional[Sequence[float]] = None, tol: float = TOL):
    """Largest candidate ``h`` such that every nested increment with
    ``t - s <= h`` is ``>= -tol``; 0 if none qualifies."""
    t = np.asarray(grid, dtype=float)
    L = t[-1] - t[0]
    if h_candidates is None:
        h_candidates = [L * 2.0**-j for j in range(0, 8)]
    mins = nested_min(m, t)
    a, b = np.triu_indices(len(t), 1)
    lengths = t[b] - t[a]
    vals = mins[a, b]
    best = 0.0
    for h in sorted(h_candidates):
        sel = lengths <= h * (1 + 1e-12)
        if not sel.any() or np.min(vals[sel]) >= -tol:
            best = h
        else:
            break
    return best


# ---------------------------------------------------------------------------
# off-diagonal masses
# ---------------------------------------------------------------------------


def _masses(m: CovarianceModel, n: int):
    inc = increment_matrix(gram(m, _grid(m, n), check_psd=False))
    off = ~np.eye(n - 1, dtype=bool)
    vals = inc[off]
    return float(np.sum(vals[vals > 0])), float(-np.sum(vals[vals < 0]))


def _trend(series: Sequence[float]) -> str:
    if max(series) < 1e-12:
        return "zero"
    increasing = all(b >= a for a, b in zip(series[:-1], series[1:]))
    if increasing and series[0] > 0 and series[-1] / series[0] > 1.5:
        return "diverging"
    return "converging"


def mass_estimates(m: CovarianceModel, grid_sizes: Sequence[int] = (33, 65, 129, 257)):
    """Off-diagonal positive and negative masses at the finest grid, with the
    refinement trend of each (``zero``, ``converging`` or ``diverging``)."""
    pm = [_masses(m, n) for n in grid_sizes]
    plus, minus = [p for p, _ in pm], [q for _, q in pm]
    return plus[-1], minus[-1], {
        "grid_sizes": list(grid_sizes),
        "mu_plus": plus,
        "mu_minus": minus,
        "mu_plus_trend": _trend(plus),
        "mu_minus_trend": _trend(minus),
    }


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------


def route(m: CovarianceModel):
    """``("A", 1.0)`` or ``("B", ρ)`` from the catalog rules."""
    k, p = m.kind, m.params
    if k == "FBM":
        return ("A", 1.0) if p["H"] >= 0.5 else ("B", 1 / (2 * p["H"]))
    if k == "BiFBM":
        hk = p["H"] * p["K"]
        return ("A", 1.0) if hk >= 0.5 else ("B", 1 / (2 * hk))
    if k == "FractionalOU":
        return ("A", 1.0) if p["H"] >= 0.5 else ("B", 1 / (2 * p["H"]))
    if k in ("BrownianBridge", "OU"):
        return ("A", 1.0)
    if k == "SHESpatialDirichlet":
        return ("B", 1 / (2 * p["alpha"] - 1))
    if k in ("RFS", "SHESpatialPeriodic"):
        return ("B", m.nominal_rho)
    if k in ("StationaryF", "Spectral"):
        regime = m.meta.get("regime")
        if regime == "concave":
            return ("B", m.nominal_rho)
        if regime == "convex":
            return ("A", 1.0)
        raise UnknownKind(f"{k} needs regime metadata ('concave' or 'convex') to be routed")
    raise UnknownKind(k)


def classify(m: CovarianceModel, grid_n: int = 65, evidence: bool = True) -> ConditionReport:
    part, rho = route(m)
    rep = ConditionReport(model=m.tag, route=part, rho_used=rho)
    if not evidence:
        return rep
    grid = _grid(m, grid_n)
    C, ok, ev = jm_check(m, rho)
    rep.jm_constant = C
    rep.add("JM", "pass" if ok else "fail", **ev)
    plus, minus, mev = mass_estimates(m)
    rep.mu_plus_mass, rep.mu_minus_mass = plus, minus
    rep.add("A.i", "assumed", note="continuity of the distribution function of mu_minus is assumed")
    if part == "A":
        rep.add(
            "A.ii",
            "pass" if mev["mu_minus_trend"] != "diverging" else "fail",
            **mev,
        )
        # V_1 on the full square is sigma^2 + 2 mu_minus on the same grid
        G = gram(m, grid, check_psd=False)
        v1, _ = mixed_var_matrix(G, 1.0, 1.0, "lower")
        inc = increment_matrix(G)
        off = ~np.eye(len(grid) - 1, dtype=bool)
        mm = float(-np.sum(inc[off][inc[off] < 0]))
        s2 = float(sigma2(m, grid[0], grid[-1]))
        rep.add("A.conclusion", "pass" if v1 <= s2 + 2 * mm + 1e-8 else "fail", V1=v1, sigma2=s2, mu_minus=mm, grid_n=grid_n)
    else:
        h = sign_check_b2(m, _grid(m, 33))
        rep.h_detected = h
        rep.add("B.i", "pass" if ok else "fail", note="(JM) with the routed rho")
        rep.add("B.ii", "pass" if h > 0 else "fail", h_detected=h, grid_n=33)
        # B.iii: mu_plus is finite on the diagonal neighbourhood
        rep.add(
            "B.iii",
            "pass" if mev["mu_plus_trend"] != "diverging" else "fail",
            mu_plus=mev["mu_plus"],
            mu_minus=mev["mu_minus"],
            mu_minus_trend=mev["mu_minus_trend"],
            grid_sizes=mev["grid_sizes"],
        )
        try:
            fit = scaling_fit(m, 1.0, rho, dyadic_squares(m.domain, range(1, 7)), grid_n=32)
            close = abs(fit.slope - 1 / rho) <= 0.1
            rep.add("B.conclusion", "pass" if close else "fail", slope=fit.slope, target=1 / rho, r2=fit.r2)
        except DegenerateFit as exc:
            rep.add("B.conclusion", "fail", error=str(exc))
    return rep


# ---------------------------------------------------------------------------
# conditional variance hypotheses
# ---------------------------------------------------------------------------


def increment_variance_fn(m: CovarianceModel):
    if m.kind == "StationaryF":
        return m.params["F"]
    if m.kind in ("OU", "FractionalOU", "Spectral"):
        # F(h) = 2(K(0) - K(h)) is defined past the domain end, which the
        # forward difference at T needs
        k0 = float(stationary_kernel(m, 0.0))
        return lambda h: 2 * (k0 - stationary_kernel(m, h))
    raise NotStationary(f"{m.kind} does not have stationary increments")


def chlt_check(m: CovarianceModel, T: Optional[float] = None, grid_n: int = 64, tol: float = 1e-9):
    """Checks (i) concavity of F, (ii) F'_-(T) > 0, (iii) the conditional
    variance lower bound and (iv) non-positive correlation of disjoint
    increments, for ``σ²(s,t) = F(|t-s|)``."""
    F = increment_variance_fn(m)
    T = m.domain.hi if T is None else T
    lo = m.domain.lo
    rep = ConditionReport(model=m.tag)
    x = np.linspace(0.0, T - lo, 1025)
    Fx = np.asarray(F(x), dtype=float)
    d2 = Fx[2:] - 2 * Fx[1:-1] + Fx[:-2]
    rep.add("concave", "pass" if d2.max() <= tol else "fail", max_second_difference=float(d2.max()), n=len(x))

    L = T - lo
    delta = L / 2**10
    back = float((F(L) - F(L - delta)) / delta)
    fwd = float((F(L + delta) - F(L)) / delta)
    # for concave F: forward difference <= F'_-(L) <= backward difference
    rep.add("derivative_positive", "pass" if fwd > 0 else "fail", backward=back, forward=fwd, delta=delta)

    grid = np.linspace(lo, T, grid_n)
    C = increment_cov(m, grid)
    worst_rect, worst_deriv = math.inf, math.inf
    flagged = False
    G = gram(m, grid, check_psd=False)
    for a in range(grid_n - 1):
        for b in range(a + 1, grid_n):
            v, f = conditional_variance(m, grid, grid[a], grid[b], return_flag=True, C=C)
            flagged |= f
            rect = G[b, -1] - G[a, -1] - G[b, 0] + G[a, 0]
            worst_rect = min(worst_rect, v - rect)
            worst_deriv = min(worst_deriv, v - back * (grid[b] - grid[a]))
    rep.add(
        "conditional_variance",
        "pass" if worst_rect >= -tol and worst_deriv >= -tol else "fail",
        min_slack_vs_rect=worst_rect,
        min_slack_vs_derivative=worst_deriv,
        derivative_used=back,
        pseudo_inverse_used=flagged,
        grid_n=grid_n,
    )
    inc = increment_matrix(G)
    off = ~np.eye(grid_n - 1, dtype=bool)
    worst = float(np.max(inc[off]))
    rep.add("disjoint_increments_nonpositive", "pass" if worst <= tol else "fail", max_offdiag=worst, grid_n=grid_n)
    return rep
