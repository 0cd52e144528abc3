"""Gaussian sampling, Cameron-Martin elements and conditioning.

Randomness contract: path ``p`` of an experiment draws only from the Philox
stream keyed by ``(seed, crc32(purpose), p)``; normals come from NumPy's
ziggurat ``standard_normal``.  Paths are therefore identical whatever the
chunking or thread count.
"""

from __future__ import annotations

import math
import os
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .covariance import CovarianceModel, NotPSD, OutOfDomain, gram, gram_rect
from .fourier import CoefficientSequence
from .variation import BadExponent, Dissection

CHUNK = 256


class SingularConditioning(RuntimeWarning):
    pass


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


def stream(seed: int, purpose: str, stream_id: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFF, zlib.crc32(purpose.encode()), int(stream_id)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("GAUSSROUGH_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """``list(map(fn, items))``, run on up to ``GAUSSROUGH_THREADS`` threads."""
    items = list(items)
    k = n_threads()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def normals(seed: int, purpose: str, ids, shape) -> np.ndarray:
    """Stack of standard normal arrays, one per stream id."""
    ids = list(ids)
    chunks = [ids[i : i + CHUNK] for i in range(0, len(ids), CHUNK)]

    def draw(chunk):
        return np.stack([stream(seed, purpose, p).standard_normal(shape) for p in chunk])

    parts = ordered_map(draw, chunks)
    return np.concatenate(parts) if parts else np.empty((0, *shape))


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


@dataclass
class PathEnsemble:
    grid: np.ndarray
    data: np.ndarray  # (M, n, d)
    seed: int
    tag: str = ""

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.data.ndim != 3 or self.data.shape[1] != len(self.grid):
            raise ValueError("data must have shape (paths, grid, components)")

    @property
    def M(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[2]


def _grid_array(grid) -> np.ndarray:
    if isinstance(grid, Dissection):
        return grid.array()
    return np.asarray(grid, dtype=float)


def cholesky_factor(G: np.ndarray) -> np.ndarray:
    """Lower factor with exactly degenerate points zeroed and one ridge retry."""
    n = len(G)
    live = np.diag(G) > 0
    L = np.zeros_like(G)
    sub = G[np.ix_(live, live)]
    try:
        Ls = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        try:
            Ls = np.linalg.cholesky(sub + 1e-12 * max(1.0, float(np.max(np.diag(sub)))) * np.eye(len(sub)))
        except np.linalg.LinAlgError as exc:
            raise NotPSD(f"Cholesky failed after ridge retry ({n} points)") from exc
    L[np.ix_(live, live)] = Ls
    return L


def sample_cholesky(m: CovarianceModel, grid, d: int, M: int, seed: int) -> PathEnsemble:
    """Exact Gaussian paths with covariance ``gram(m, grid)`` in each of ``d`` components."""
    t = _grid_array(grid)
    L = cholesky_factor(gram(m, t))
    Z = normals(seed, "cholesky", range(M), (len(t), d))
    X = np.einsum("ij,mjd->mid", L, Z)
    return PathEnsemble(t, X, seed, m.tag)


def rfs_basis(a: CoefficientSequence, N: int, grid) -> np.ndarray:
    """Columns ``[α_0/2, α_k sin(kt), α_{-k} cos(kt)]`` for ``k = 1..N``."""
    t = _grid_array(grid)
    k = np.arange(1, N + 1)
    ap, an = a(k), a(-k)
    if np.any(ap < 0) or np.any(an < 0) or a.a0 < 0:
        raise ValueError("sampling needs non-negative squared coefficients")
    kt = np.outer(t, k)
    return np.hstack([np.full((len(t), 1), 0.5 * math.sqrt(a.a0)), np.sin(kt) * np.sqrt(ap), np.cos(kt) * np.sqrt(an)])


def rfs_modes(seed: int, N: int, d: int, ids, purpose: str = "rfs") -> np.ndarray:
    """Mode draws ``(paths, 2N+1, d)`` in the column layout of ``rfs_basis``."""
    return normals(seed, purpose, ids, (2 * N + 1, d))


def truncate_modes(Y: np.ndarray, N_full: int, N: int) -> np.ndarray:
    """Mode rows kept by a truncation to ``N`` frequencies (same draws)."""
    keep = np.r_[0, 1 : N + 1, N_full + 1 : N_full + 1 + N]
    return Y[:, keep, :]


def sample_rfs(a, N: int, grid, d: int, M: int, seed: int) -> PathEnsemble:
    """Random Fourier series paths by direct synthesis.

    ``a`` is one CoefficientSequence or a list with one per component.
    """
    coeffs = list(a) if isinstance(a, (list, tuple)) else [a] * d
    if len(coeffs) != d:
        raise ValueError("need one coefficient sequence per component")
    for c in coeffs:
        if N > c.k_max:
            raise ValueError("N exceeds the coefficient cutoff")
    t = _grid_array(grid)
    bases = [rfs_basis(c, N, t) for c in coeffs]
    out = np.empty((M, len(t), d))

    def chunk(lo):
        ids = range(lo, min(M, lo + CHUNK))
        Y = normals(seed, "rfs", ids, (2 * N + 1, d))
        block = np.empty((len(ids), len(t), d))
        for c in range(d):
            block[:, :, c] = Y[:, :, c] @ bases[c].T
        return lo, block

    for lo, block in ordered_map(chunk, range(0, M, CHUNK)):
        out[lo : lo + len(block)] = block
    return PathEnsemble(t, out, seed, "RFS")


def ou_evolve(lam, Y0, tau: float, rng: np.random.Generator) -> np.ndarray:
    """Exact stationary OU transition, unit stationary variance, modes along the last axis."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0) or tau < 0:
        raise ValueError("need lambda > 0 and tau >= 0")
    Y0 = np.asarray(Y0, dtype=float)
    if tau == 0:
        return Y0.copy()
    decay = np.exp(-lam * tau)
    noise = np.sqrt(-np.expm1(-2 * lam * tau))
    return decay * Y0 + noise * rng.standard_normal(Y0.shape)


def empirical_cov(e: PathEnsemble, model: Optional[CovarianceModel] = None):
    """Unbiased covariance over paths (components pooled).

    Returns ``(C, se, max_err)``; ``se`` is the Gaussian standard error of
    each entry and ``max_err`` the largest deviation from the model gram
    (None without a model).
    """
    if e.M < 2:
        raise ValueError("need at least two paths")
    X = np.moveaxis(e.data, 2, 1).reshape(-1, len(e.grid))
    C = np.cov(X, rowvar=False, ddof=1)
    C = np.atleast_2d(C)
    n_eff = X.shape[0]
    G = gram(model, e.grid, check_psd=False) if model is not None else C
    v = np.diag(G)
    se = np.sqrt((np.outer(v, v) + G**2) / n_eff)
    err = float(np.max(np.abs(C - G))) if model is not None else None
    return C, se, err


# ---------------------------------------------------------------------------
# Cameron-Martin elements
# ---------------------------------------------------------------------------


@dataclass
class CameronMartinElement:
    anchors: np.ndarray
    weights: np.ndarray
    grid: np.ndarray
    h: np.ndarray
    h_norm: float
    model: Optional[CovarianceModel] = field(default=None, repr=False)

    def at(self, points) -> np.ndarray:
        """``h(t) = Σ c_i R(s_i, t)`` at arbitrary points."""
        return self.weights @ gram_rect(self.model, self.anchors, points)


def cm_element(m: CovarianceModel, anchors, weights, grid=None) -> CameronMartinElement:
    s = np.asarray(anchors, dtype=float).reshape(-1)
    c = np.asarray(weights, dtype=float).reshape(-1)
    if len(s) != len(c):
        raise ValueError("anchors and weights differ in length")
    if not m.domain.contains(s):
        raise OutOfDomain("anchor outside the model domain")
    g = s if grid is None else _grid_array(grid)
    G = gram(m, s, check_psd=False)
    norm2 = float(c @ G @ c)
    h = c @ gram_rect(m, s, g)
    return CameronMartinElement(s, c, g, h, math.sqrt(max(norm2, 0.0)), m)


def cm_exponent(rho: float) -> float:
    """``q = 1 / (1/(2ρ) + 1/2) = 2ρ / (1 + ρ)``."""
    if not rho >= 1:
        raise BadExponent("rho must be >= 1")
    return 2 * rho / (1 + rho)


def embedding_check(m: CovarianceModel, rho: float, D, h: CameronMartinElement):
    """Both sides of the discrete embedding inequality on dissection ``D``.

    lhs = ‖(h_{t_j, t_{j+1}})_j‖_q, rhs = |h|_H (Σ_j (Σ_k |R_jk|)^ρ)^{1/(2ρ)},
    with ``R_jk`` the covariance of the increments over cells j and k.
    """
    q = cm_exponent(rho)
    t = _grid_array(D)
    inc = np.diff(h.at(t))
    lhs = float(np.sum(np.abs(inc) ** q) ** (1 / q))
    G = gram(m, t, check_psd=False)
    Rjk = np.diff(np.diff(G, axis=0), axis=1)
    row = np.sum(np.abs(Rjk), axis=1)
    rhs = h.h_norm * float(np.sum(row**rho)) ** (1 / (2 * rho))
    return lhs, rhs, rhs - lhs


def embedding_trials(m: CovarianceModel, rho: float, n_elements: int = 500, n_points: int = 32, seed: int = 0):
    """Embedding inequality on random elements and random dissections.

    Each trial draws 1-5 anchors, normal weights and a dissection of
    ``n_points`` points containing both domain endpoints.  Returns an array
    of rows ``(lhs, rhs, slack)``.
    """
    lo, hi = m.domain.lo, m.domain.hi
    out = np.empty((n_elements, 3))
    for i in range(n_elements):
        rng = stream(seed, "embedding", i)
        k = int(rng.integers(1, 6))
        anchors = rng.uniform(lo, hi, k)
        weights = rng.standard_normal(k)
        D = np.r_[lo, np.sort(rng.uniform(lo, hi, n_points - 2)), hi]
        h = cm_element(m, anchors, weights)
        out[i] = embedding_check(m, rho, D, h)
    return out


# ---------------------------------------------------------------------------
# conditioning
# ---------------------------------------------------------------------------


def increment_cov(m: CovarianceModel, grid) -> np.ndarray:
    t = _grid_array(grid)
    G = gram(m, t, check_psd=False)
    return np.diff(np.diff(G, axis=0), axis=1)


def _index(t: np.ndarray, x) -> int:
    i = int(np.argmin(np.abs(t - x)))
    if abs(t[i] - x) > 1e-12 * max(1.0, abs(x)):
        raise ValueError(f"{x} is not a grid point")
    return i


def conditional_variance(m: CovarianceModel, grid, s, t, return_flag: bool = False, C=None):
    """``Var(X_{s,t} | grid increments outside [s, t])`` by a Schur complement.

    Falls back to a pseudo-inverse (and warns) when the conditioning block is
    numerically singular.  ``C`` may pass a precomputed increment covariance.
    """
    pts = _grid_array(grid)
    i, j = _index(pts, s), _index(pts, t)
    if not i < j:
        raise ValueError("need s < t")
    C = increment_cov(m, pts) if C is None else C
    inside = np.zeros(len(pts) - 1, dtype=bool)
    inside[i:j] = True
    a = inside.astype(float)
    var = float(a @ C @ a)
    B = ~inside
    if not B.any():
        return (var, False) if return_flag else var
    Cbb = C[np.ix_(B, B)]
    cab = C[inside][:, B].sum(axis=0)
    flagged = False
    try:
        L = np.linalg.cholesky(Cbb)
        if np.min(np.diag(L)) < 1e-7 * math.sqrt(max(float(np.max(np.diag(Cbb))), 1e-300)):
            raise np.linalg.LinAlgError
        y = np.linalg.solve(L, cab)
        reduction = float(y @ y)
    except np.linalg.LinAlgError:
        flagged = True
        warnings.warn("conditioning block singular; using pseudo-inverse", SingularConditioning)
        reduction = float(cab @ np.linalg.pinv(Cbb, rcond=1e-12, hermitian=True) @ cab)
    out = var - reduction
    return (out, flagged) if return_flag else out
