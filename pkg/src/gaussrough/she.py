"""Spectral simulation of the fractional stochastic heat equation and the
Monte Carlo rate experiments for spatial rough path lifts.

Each spatial slice is a finite sum of eigenfunctions with independent
stationary Ornstein-Uhlenbeck amplitudes.  Approximations (Galerkin
truncation, hyper-viscosity, truncated random Fourier series) are always
coupled to the reference field through the same mode draws.

Rough path distances use a lift of level 2 (or 3) and the dyadic pair family;
the exponent of a rate is unaffected by either choice.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .fitting import DegenerateFit, RateFit, loglog_fit
from .fourier import CoefficientSequence
from .gaussian import PathEnsemble, normals, ordered_map, ou_evolve, rfs_basis, stream
from .roughpath import dist_homog, dist_inhomog, hnorm, signature

PATH_CHUNK = 100
MAX_REL_SE = 0.2


class MCNoiseDominates(RuntimeError):
    pass


@dataclass
class SHEConfig:
    alpha: float
    bc: str = "dirichlet"  # dirichlet | periodic | neumann
    lam_shift: float = 1.0  # spectrum shift for periodic / neumann
    color: float = 0.0  # periodic noise colour: sigma_k = |k|^{-2 color}
    d: int = 2
    n_modes: int = 1024
    x_n: int = 1025
    t_grid: tuple = (0.0,)
    M: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1:
            raise ValueError("alpha must lie in (1/2, 1]")
        if self.bc not in ("dirichlet", "periodic", "neumann"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.lam_shift <= 0 and self.bc != "dirichlet":
            raise ValueError("spectrum shift must be positive")
        t = np.asarray(self.t_grid, dtype=float)
        if np.any(np.diff(t) < 0):
            raise ValueError("t_grid must be increasing")

    @property
    def x_grid(self) -> np.ndarray:
        return np.linspace(0.0, 2 * math.pi, self.x_n)

    @property
    def rho(self) -> float:
        return 1 / (2 * self.alpha - 1)

    def to_dict(self):
        return asdict(self)


def eigenvalues(cfg: SHEConfig, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if cfg.bc == "dirichlet":
        return (k / 2) ** (2 * cfg.alpha)
    if cfg.bc == "neumann":
        return (k / 2) ** (2 * cfg.alpha) + cfg.lam_shift
    return cfg.lam_shift + np.abs(k) ** (2 * cfg.alpha)


def mode_table(cfg: SHEConfig, n: Optional[int] = None, viscosity: float = 0.0, theta: float = 2.0):
    """``(basis, lam, freq)``: scaled eigenfunctions on ``x_grid`` (columns),
    OU rates and the frequency index of every column.

    ``viscosity`` adds ``ε (k/2)^{2θ}`` (Dirichlet/Neumann) or ``ε |k|^{2θ}``
    (periodic) to the rates.
    """
    n = cfg.n_modes if n is None else n
    x = cfg.x_grid
    if cfg.bc == "dirichlet":
        k = np.arange(1, n + 1)
        funcs = np.sin(np.outer(x, k) / 2)
        extra = (k / 2) ** (2 * theta)
        sigma = np.ones(n)
    elif cfg.bc == "neumann":
        k = np.arange(0, n + 1)
        funcs = np.cos(np.outer(x, k) / 2)
        extra = (k / 2) ** (2 * theta)
        sigma = np.ones(n + 1)
    else:
        kk = np.arange(1, n + 1)
        k = np.r_[0, kk, kk]
        funcs = np.hstack([np.full((len(x), 1), 0.5), np.sin(np.outer(x, kk)), np.cos(np.outer(x, kk))])
        extra = np.abs(k) ** (2 * theta)
        with np.errstate(divide="ignore"):
            sigma = np.where(k > 0, np.abs(k).astype(float) ** (-2 * cfg.color), 1.0)
    lam = eigenvalues(cfg, k) + viscosity * extra
    a = sigma / (2 * lam)
    return funcs * np.sqrt(a), lam, k


def truncation_mask(cfg: SHEConfig, N: int) -> np.ndarray:
    """Columns of the mode table kept by the Galerkin projection onto N modes."""
    return np.abs(_freqs(cfg)) <= N


def _freqs(cfg: SHEConfig) -> np.ndarray:
    n = cfg.n_modes
    if cfg.bc == "dirichlet":
        return np.arange(1, n + 1)
    if cfg.bc == "neumann":
        return np.arange(0, n + 1)
    kk = np.arange(1, n + 1)
    return np.r_[0, kk, kk]


def _mode_draws(cfg: SHEConfig, ids, purpose="she") -> np.ndarray:
    K = len(_freqs(cfg))
    return normals(cfg.seed, purpose, ids, (K, cfg.d))


def _synth(basis: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Fields ``(paths, x, d)`` from mode amplitudes ``(paths, K, d)``."""
    return np.einsum("xk,mkd->mxd", basis, Y, optimize=True)


def she_stationary_slice(cfg: SHEConfig, t_index: int = 0) -> PathEnsemble:
    """Spatial slice at ``t_grid[t_index]`` of the stationary solution."""
    if t_index == 0:
        basis, _, _ = mode_table(cfg)
        data = _synth(basis, _mode_draws(cfg, range(cfg.M)))
        return PathEnsemble(cfg.x_grid, data, cfg.seed, f"SHE({cfg.bc},alpha={cfg.alpha:g})")
    return she_evolve(cfg)[t_index]


def she_evolve(cfg: SHEConfig) -> list:
    """Spatial ensembles at every time of ``t_grid`` by exact OU steps."""
    basis, lam, _ = mode_table(cfg)
    Y = np.swapaxes(_mode_draws(cfg, range(cfg.M)), 1, 2).copy()  # (M, d, K)
    gens = [stream(cfg.seed, "she-time", p) for p in range(cfg.M)]
    t = np.asarray(cfg.t_grid, dtype=float)
    out = []
    for i, ti in enumerate(t):
        if i:
            tau = ti - t[i - 1]
            for p in range(cfg.M):
                Y[p] = ou_evolve(lam, Y[p], tau, gens[p])
        data = _synth(basis, np.swapaxes(Y, 1, 2))
        out.append(PathEnsemble(cfg.x_grid, data, cfg.seed, f"SHE(t={ti:g})"))
    return out


def she_lift(slice_: PathEnsemble, level: int, beta: float, alpha: Optional[float] = None):
    """Signature record of the piecewise-linear spatial interpolation."""
    if alpha is not None and alpha <= 0.75:
        warnings.warn("the spatial lift is only covered by the theory for alpha > 3/4", RuntimeWarning)
    return signature(slice_.data, level, slice_.grid, beta=beta)


# ---------------------------------------------------------------------------
# Monte Carlo helpers
# ---------------------------------------------------------------------------


@dataclass
class RatePoint:
    x: float
    distance: float
    se: float

    @property
    def rel_se(self) -> float:
        return self.se / self.distance if self.distance > 0 else math.inf


def lq_estimate(samples: np.ndarray, q: float):
    """``E[D^q]^{1/q}`` with a delta-method standard error."""
    s = np.asarray(samples, dtype=float) ** q
    mean = float(np.mean(s))
    if mean <= 0:
        return 0.0, 0.0
    se_mean = float(np.std(s, ddof=1) / math.sqrt(len(s))) if len(s) > 1 else math.inf
    est = mean ** (1 / q)
    return est, est * se_mean / (q * mean)


def fit_rate(points: Sequence[RatePoint], drop_order: str) -> RateFit:
    """Log-log fit of distance against ``x``.

    Zero distances are left out.  If a point's relative SE exceeds 20%, the
    point at the noisy end (``drop_order`` = ``"small_x"`` or ``"large_x"``)
    is dropped, repeatedly, while at least four points remain.
    """
    pts = sorted((p for p in points if p.distance > 0), key=lambda p: p.x)
    while any(p.rel_se > MAX_REL_SE for p in pts):
        if len(pts) <= 4:
            worst = max(p.rel_se for p in pts)
            raise MCNoiseDominates(f"relative standard error {worst:.2f} exceeds {MAX_REL_SE}")
        pts = pts[1:] if drop_order == "small_x" else pts[:-1]
    if len(pts) < 4:
        raise DegenerateFit("fewer than four non-zero distances")
    x = np.array([p.x for p in pts])
    y = np.array([p.distance for p in pts])
    se = np.array([p.se for p in pts])
    return loglog_fit(x, y, se)


def _chunks(M: int, size: int = PATH_CHUNK):
    return [range(lo, min(M, lo + size)) for lo in range(0, M, size)]


def _rough_dist(x: np.ndarray, y: np.ndarray, grid, level: int, beta: float, metric: str) -> np.ndarray:
    X = signature(x, level, grid)
    Y = signature(y, level, grid)
    if metric == "inhomog":
        return dist_inhomog(X, Y, beta, pairs="dyadic")
    return dist_homog(X, Y, "holder", beta, pairs="dyadic")


# ---------------------------------------------------------------------------
# experiments on the heat equation
# ---------------------------------------------------------------------------


def galerkin_rate(
    cfg: SHEConfig,
    N_list: Sequence[int],
    beta: float,
    q: float = 2.0,
    M: Optional[int] = None,
    level: int = 2,
    metric: str = "inhomog",
):
    """Coupled distance between the field and its Galerkin projections.

    Returns ``(RateFit, points)``; the fit is against ``1/N`` so the slope is
    the convergence rate.
    """
    M = cfg.M if M is None else M
    basis, _, freqs = mode_table(cfg)
    masks = {N: np.abs(freqs) <= N for N in N_list}

    def work(ids):
        Y = _mode_draws(cfg, ids)
        ref = _synth(basis, Y)
        out = {}
        for N, mask in masks.items():
            if mask.all():
                out[N] = np.zeros(len(ids))
                continue
            approx = _synth(basis[:, mask], Y[:, mask, :])
            out[N] = _rough_dist(ref, approx, cfg.x_grid, level, beta, metric)
        return out

    parts = ordered_map(work, _chunks(M))
    points = []
    for N in N_list:
        d = np.concatenate([p[N] for p in parts])
        est, se = lq_estimate(d, q)
        points.append(RatePoint(1.0 / N, est, se))
    return fit_rate(points, drop_order="small_x"), points


def hyperviscosity_rate(
    cfg: SHEConfig,
    theta: float,
    eps_list: Sequence[float],
    beta: float,
    q: float = 2.0,
    M: Optional[int] = None,
    level: int = 2,
    metric: str = "inhomog",
):
    """Coupled distance between the field and its hyper-viscous version.

    Mode ``k`` of the approximation is ``ϱ_k Y_k + sqrt(1 - ϱ_k²) Z_k`` with
    ``ϱ_k = 2 sqrt(λ_k λ_k^ε) / (λ_k + λ_k^ε)``, the stationary correlation of
    two OU processes driven by the same noise.
    """
    if theta <= cfg.alpha:
        raise ValueError("theta must exceed alpha")
    M = cfg.M if M is None else M
    basis, lam, _ = mode_table(cfg)
    tables = {}
    for eps in eps_list:
        b_eps, lam_eps, _ = mode_table(cfg, viscosity=eps, theta=theta)
        tables[eps] = (b_eps, viscous_correlation(lam, lam_eps))

    def work(ids):
        Y = _mode_draws(cfg, ids)
        Z = _mode_draws(cfg, ids, purpose="she-viscous")
        ref = _synth(basis, Y)
        out = {}
        for eps, (b_eps, corr) in tables.items():
            if eps == 0:
                out[eps] = np.zeros(len(ids))
                continue
            c = corr[None, :, None]
            approx = _synth(b_eps, c * Y + np.sqrt(np.clip(1 - c**2, 0, None)) * Z)
            out[eps] = _rough_dist(ref, approx, cfg.x_grid, level, beta, metric)
        return out

    parts = ordered_map(work, _chunks(M))
    points = []
    for eps in eps_list:
        d = np.concatenate([p[eps] for p in parts])
        est, se = lq_estimate(d, q)
        points.append(RatePoint(float(eps), est, se))
    try:
        fit = fit_rate(points, drop_order="small_x")
    except DegenerateFit:
        fit = None
    return fit, points


def viscous_correlation(lam, lam_eps) -> np.ndarray:
    lam, lam_eps = np.asarray(lam, dtype=float), np.asarray(lam_eps, dtype=float)
    return 2 * np.sqrt(lam * lam_eps) / (lam + lam_eps)


def time_regularity_probe(
    cfg: SHEConfig,
    beta: float,
    taus: Sequence[float],
    q: float = 1.0,
    M: Optional[int] = None,
    level: int = 2,
    metric: str = "inhomog",
):
    """Slope of ``E ρ(Ψ(t), Ψ(s))`` against ``|t - s|`` for the lifted slices.

    For every lag the later slice is one exact OU step from the same initial
    slice.  Returns ``(RateFit, points)``.
    """
    if cfg.alpha <= 0.75:
        warnings.warn("time regularity of the lift needs alpha > 3/4", RuntimeWarning)
    M = cfg.M if M is None else M
    basis, lam, _ = mode_table(cfg)

    def work(ids):
        Y = np.swapaxes(_mode_draws(cfg, ids), 1, 2)  # (m, d, K)
        ref = _synth(basis, np.swapaxes(Y, 1, 2))
        out = {}
        for j, tau in enumerate(taus):
            if tau == 0:
                out[tau] = np.zeros(len(ids))
                continue
            later = np.stack(
                [ou_evolve(lam, Y[i], tau, stream(cfg.seed, f"she-lag-{j}", p)) for i, p in enumerate(ids)]
            )
            moved = _synth(basis, np.swapaxes(later, 1, 2))
            out[tau] = _rough_dist(ref, moved, cfg.x_grid, level, beta, metric)
        return out

    parts = ordered_map(work, _chunks(M))
    points = []
    for tau in taus:
        d = np.concatenate([p[tau] for p in parts])
        est, se = lq_estimate(d, q)
        points.append(RatePoint(float(tau), est, se))
    return fit_rate(points, drop_order="small_x"), points


def time_envelope(alpha: float) -> float:
    """Upper envelope ``½(1 - 1/(2α))`` for the measured time exponent."""
    return 0.5 * (1 - 1 / (2 * alpha))


# ---------------------------------------------------------------------------
# experiments on random Fourier series
# ---------------------------------------------------------------------------


def rfs_truncation_rate(
    a: CoefficientSequence,
    N_list: Sequence[int],
    beta: float,
    q: float = 2.0,
    M: int = 1000,
    seed: int = 0,
    N_ref: int = 2048,
    x_n: int = 1025,
    d: int = 2,
    level: int = 2,
    metric: str = "inhomog",
):
    """Coupled distance between an N_ref-mode series and its N-mode truncations."""
    grid = np.linspace(0.0, 2 * math.pi, x_n)
    basis = rfs_basis(a, N_ref, grid)
    k = np.r_[0, np.arange(1, N_ref + 1), np.arange(1, N_ref + 1)]
    masks = {N: k <= N for N in N_list}

    def work(ids):
        Y = normals(seed, "rfs", ids, (2 * N_ref + 1, d))
        ref = _synth(basis, Y)
        out = {}
        for N, mask in masks.items():
            if mask.all():
                out[N] = np.zeros(len(ids))
                continue
            out[N] = _rough_dist(ref, _synth(basis[:, mask], Y[:, mask, :]), grid, level, beta, metric)
        return out

    parts = ordered_map(work, _chunks(M))
    points = []
    for N in N_list:
        dist = np.concatenate([p[N] for p in parts])
        est, se = lq_estimate(dist, q)
        points.append(RatePoint(1.0 / N, est, se))
    return fit_rate(points, drop_order="small_x"), points


def _moment_scaling(basis, grid, draw, M, scales, level):
    x_n = len(grid)
    J = int(round(math.log2(x_n - 1)))
    if 2**J + 1 != x_n or max(scales) > J:
        raise ValueError("grid must have 2^J + 1 points with J >= max(scales)")

    def work(ids):
        rec = signature(_synth(basis, draw(ids)), level, grid)
        out = {}
        for j in scales:
            step = 2 ** (J - j)
            s = np.arange(0, x_n - 1, step)
            out[j] = np.mean(hnorm(rec.increment(s, s + step)) ** 2, axis=-1)  # per-path average
        return out

    parts = ordered_map(work, _chunks(M))
    points = []
    span = grid[-1] - grid[0]
    for j in scales:
        per_path = np.concatenate([p[j] for p in parts])
        mean = float(np.mean(per_path))
        se = float(np.std(per_path, ddof=1) / math.sqrt(len(per_path)))
        points.append(RatePoint(span * 2.0**-j, mean, se))
    return fit_rate(points, drop_order="small_x"), points


def rfs_moment_scaling(
    a: CoefficientSequence,
    M: int = 2000,
    seed: int = 0,
    N: int = 2048,
    x_n: int = 1025,
    scales: Sequence[int] = (3, 4, 5, 6, 7),
    d: int = 2,
    level: int = 2,
):
    """Slope of ``log E d(Ψ_s, Ψ_t)²`` against ``log |t - s|``.

    ``d`` is the homogeneous distance of the lifted path; pairs are the
    dyadic intervals of length ``2π 2^{-j}`` for ``j`` in ``scales``.
    """
    grid = np.linspace(0.0, 2 * math.pi, x_n)
    basis = rfs_basis(a, N, grid)
    return _moment_scaling(basis, grid, lambda ids: normals(seed, "rfs", ids, (2 * N + 1, d)), M, scales, level)


def she_moment_scaling(cfg: SHEConfig, scales: Sequence[int] = (3, 4, 5, 6, 7), M: Optional[int] = None, level: int = 2):
    """Moment scaling of the lifted stationary slice; the slope should be near ``2α - 1``."""
    basis, _, _ = mode_table(cfg)
    M = cfg.M if M is None else M
    return _moment_scaling(basis, cfg.x_grid, lambda ids: _mode_draws(cfg, ids), M, scales, level)
