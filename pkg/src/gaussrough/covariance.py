"""Covariance model catalog.

Every model evaluates R(s, t) vectorised over broadcast arrays.  Series kinds
(random Fourier series and the spatial heat-equation slices) are partial sums
with an explicit cutoff; the analytic tail bound of the neglected modes is
kept on the model so callers can report it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import fourier
from .fourier import CoefficientSequence, SpectralDensity

_EPS_DOMAIN = 1e-12


class OutOfDomain(ValueError):
    pass


class TailNotControlled(ArithmeticError):
    pass


class NotPSD(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x, tol=_EPS_DOMAIN) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= self.lo - tol) & (x <= self.hi + tol)))


@dataclass(frozen=True)
class Rectangle:
    s: Interval  # horizontal side
    u: Interval  # vertical side

    @classmethod
    def square(cls, lo, hi):
        iv = Interval(lo, hi)
        return cls(iv, iv)

    def off_diagonal(self) -> bool:
        """True when the two sides overlap in at most an endpoint."""
        return self.s.hi <= self.u.lo or self.u.hi <= self.s.lo


@dataclass(frozen=True)
class TruncationPolicy:
    """Cutoff for series kinds.

    ``n_cov`` modes are summed.  With ``strict`` set, the cutoff is raised
    (up to ``n_max``) until the analytic tail bound drops below ``tail_tol``;
    if that is impossible, ``TailNotControlled`` is raised.
    """

    n_cov: int = 4096
    tail_tol: float = 1e-10
    n_max: int = 1 << 16
    strict: bool = False

    def resolve(self, coeffs: CoefficientSequence) -> tuple[int, float]:
        n = min(self.n_cov, coeffs.k_max)
        bound = coeffs.tail_bound(n)
        if self.strict and bound > self.tail_tol:
            # tail ~ C rho n^{-1/rho}; solve for n
            c = coeffs.sup_weighted() * coeffs.decay_rho
            need = math.ceil((c / self.tail_tol) ** coeffs.decay_rho)
            if need > min(self.n_max, coeffs.k_max):
                raise TailNotControlled(
                    f"tail tolerance {self.tail_tol:g} needs about {need} modes "
                    f"(limit {min(self.n_max, coeffs.k_max)})"
                )
            n = need
            bound = coeffs.tail_bound(n)
        return n, bound


SERIES_KINDS = ("RFS", "SHESpatialDirichlet", "SHESpatialPeriodic")
STATIONARY_KINDS = ("StationaryF", "OU", "FractionalOU", "Spectral", "SHESpatialPeriodic")


@dataclass(frozen=True)
class CovarianceModel:
    kind: str
    params: dict
    domain: Interval
    nominal_rho: float
    trunc: TruncationPolicy = field(default_factory=TruncationPolicy)
    meta: dict = field(default_factory=dict)

    # cached series data, filled in by the factories
    _series: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def tag(self) -> str:
        inner = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{self.kind}({inner})"

    @property
    def n_cov(self) -> int:
        return self._series[0] if self._series else 0

    @property
    def tail_bound(self) -> float:
        return self._series[1] if self._series else 0.0

    def __call__(self, s, t):
        return eval_cov(self, s, t)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:g}"
    if isinstance(v, CoefficientSequence):
        return v.name
    if isinstance(v, SpectralDensity):
        return v.name
    if callable(v):
        return getattr(v, "__name__", "F")
    return str(v)


# ---------------------------------------------------------------------------
# factories
# ---------------------------------------------------------------------------


def _check_open_unit(name, x, closed_right=False):
    ok = 0 < x <= 1 if closed_right else 0 < x < 1
    if not ok:
        raise ValueError(f"{name} out of range: {x}")


def fbm(H: float, T: float = 1.0) -> CovarianceModel:
    _check_open_unit("H", H)
    return CovarianceModel("FBM", {"H": H}, Interval(0.0, T), max(1.0, 1 / (2 * H)))


def brownian_bridge(T: float = 1.0) -> CovarianceModel:
    if T <= 0:
        raise ValueError("T must be positive")
    return CovarianceModel("BrownianBridge", {"T": T}, Interval(0.0, T), 1.0)


def stationary_f(F: Callable, domain=(0.0, 1.0), rho: float = 1.0, regime: Optional[str] = None):
    """Process with stationary increments, ``σ²(s,t) = F(|t-s|)``, started at 0.

    ``regime`` is ``"concave"`` (increments negatively correlated) or
    ``"convex"``; classification needs it.
    """
    if abs(float(F(0.0))) > 1e-14:
        raise ValueError("F(0) must vanish")
    return CovarianceModel(
        "StationaryF", {"F": F}, Interval(*domain), float(rho), meta={"regime": regime}
    )


def ou(lam: float, T: float = 1.0) -> CovarianceModel:
    """Stationary Ornstein-Uhlenbeck process with unit variance."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return CovarianceModel("OU", {"lam": lam}, Interval(0.0, T), 1.0)


def fractional_ou(H: float, lam: float = 1.0, T: float = 1.0) -> CovarianceModel:
    _check_open_unit("H", H)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    dens = fourier.fractional_ou_density(H, lam)
    return CovarianceModel(
        "FractionalOU", {"H": H, "lam": lam, "density": dens}, Interval(0.0, T), max(1.0, 1 / (2 * H))
    )


def bifbm(H: float, K: float, T: float = 1.0) -> CovarianceModel:
    _check_open_unit("H", H)
    _check_open_unit("K", K, closed_right=True)
    return CovarianceModel(
        "BiFBM", {"H": H, "K": K}, Interval(0.0, T), max(1.0, 1 / (2 * H * K))
    )


def _with_series(model: CovarianceModel, coeffs) -> CovarianceModel:
    return replace(model, _series=model.trunc.resolve(coeffs))


def rfs(a: CoefficientSequence, trunc: Optional[TruncationPolicy] = None) -> CovarianceModel:
    m = CovarianceModel(
        "RFS", {"a": a}, Interval(0.0, 2 * math.pi), max(1.0, a.decay_rho), trunc or TruncationPolicy()
    )
    return _with_series(m, a)


def she_dirichlet(alpha: float, trunc: Optional[TruncationPolicy] = None) -> CovarianceModel:
    if not 0.5 < alpha <= 1:
        raise ValueError("alpha must lie in (1/2, 1]")
    coeffs = fourier.she_dirichlet_coeffs(alpha)
    m = CovarianceModel(
        "SHESpatialDirichlet",
        {"alpha": alpha},
        Interval(0.0, 2 * math.pi),
        1 / (2 * alpha - 1),
        trunc or TruncationPolicy(),
    )
    return _with_series(m, coeffs)


def periodic_coeffs(alpha: float, lam: float, color: float) -> CoefficientSequence:
    """``a_k = σ_k / (2 (λ + |k|^{2α}))`` with noise colour ``σ_k = |k|^{-2 color}``."""
    decay = 2 * alpha + 2 * color
    rho = max(1.0, 1 / (decay - 1))
    return CoefficientSequence(
        rule=lambda k: k ** (-2 * color) / (2 * (lam + k ** (2 * alpha))),
        decay_rho=rho,
        a0=1.0 / (2 * lam),
        name=f"periodic(alpha={alpha:g},lam={lam:g},color={color:g})",
    )


def she_periodic(alpha: float, lam: float = 1.0, color: float = 0.0, trunc=None) -> CovarianceModel:
    if not 0.5 < alpha <= 1:
        raise ValueError("alpha must lie in (1/2, 1]")
    if lam <= 0:
        raise ValueError("lambda shift must be positive")
    coeffs = periodic_coeffs(alpha, lam, color)
    m = CovarianceModel(
        "SHESpatialPeriodic",
        {"alpha": alpha, "lam": lam, "color": color},
        Interval(0.0, 2 * math.pi),
        coeffs.decay_rho,
        trunc or TruncationPolicy(),
    )
    return _with_series(m, coeffs)


def spectral(f: SpectralDensity, T: float = 1.0, regime: Optional[str] = None) -> CovarianceModel:
    """Stationary process with spectral density ``f``."""
    rho = max(1.0, 1 / (f.decay - 1)) if math.isfinite(f.decay) else 1.0
    return CovarianceModel("Spectral", {"f": f}, Interval(0.0, T), rho, meta={"regime": regime})


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def series_coeffs(m: CovarianceModel) -> CoefficientSequence:
    if m.kind == "RFS":
        return m.params["a"]
    if m.kind == "SHESpatialDirichlet":
        return fourier.she_dirichlet_coeffs(m.params["alpha"])
    if m.kind == "SHESpatialPeriodic":
        p = m.params
        return periodic_coeffs(p["alpha"], p["lam"], p["color"])
    raise TypeError(f"{m.kind} is not a series kind")


def feature_matrix(m: CovarianceModel, points) -> np.ndarray:
    """Rows ``φ(p)`` with ``R(p, q) = φ(p) · φ(q)`` for series kinds."""
    x = np.asarray(points, dtype=float).reshape(-1)
    n = m.n_cov
    a = series_coeffs(m)
    k = np.arange(1, n + 1)
    if m.kind == "SHESpatialDirichlet":
        return np.sin(np.outer(x, k) / 2) * np.sqrt(a(k))
    pos = np.sqrt(np.clip(a(k), 0, None))
    neg = np.sqrt(np.clip(a(-k), 0, None))
    kx = np.outer(x, k)
    cols = [np.full((len(x), 1), 0.5 * math.sqrt(max(a.a0, 0.0))), np.sin(kx) * pos, np.cos(kx) * neg]
    return np.hstack(cols)


def _stationary_k(m: CovarianceModel, lag: np.ndarray) -> np.ndarray:
    """Covariance ``K(lag)`` of a stationary kind, computed on unique lags."""
    flat = np.abs(lag).reshape(-1)
    uniq, inv = np.unique(np.round(flat, 14), return_inverse=True)
    if m.kind == "OU":
        vals = np.exp(-m.params["lam"] * uniq)
    elif m.kind == "FractionalOU":
        vals = fourier.spectral_cov(m.params["density"], uniq)
    elif m.kind == "Spectral":
        vals = fourier.spectral_cov(m.params["f"], uniq)
    else:
        raise TypeError(m.kind)
    return np.asarray(vals, dtype=float)[inv].reshape(lag.shape)


def stationary_kernel(m: CovarianceModel, lag) -> np.ndarray:
    """``K(lag)`` for OU, FractionalOU and Spectral kinds; any real lag is allowed."""
    return _stationary_k(m, np.asarray(lag, dtype=float))


def _check_domain(m, s, t):
    if not (m.domain.contains(s) and m.domain.contains(t)):
        raise OutOfDomain(f"{m.tag}: points outside [{m.domain.lo}, {m.domain.hi}]")


def _pow(x, e):
    # 0^e := 0 for e > 0, which keeps R continuous at the origin
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.abs(x) ** e, 0.0)


def eval_cov(m: CovarianceModel, s, t):
    """``R(s, t)`` with NumPy broadcasting."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_domain(m, s, t)
    s, t = np.broadcast_arrays(s, t)
    k, p = m.kind, m.params
    if k == "FBM":
        h2 = 2 * p["H"]
        out = 0.5 * (_pow(s, h2) + _pow(t, h2) - _pow(np.abs(t - s), h2))
    elif k == "BrownianBridge":
        out = np.minimum(s, t) - s * t / p["T"]
    elif k == "StationaryF":
        F = p["F"]
        out = 0.5 * (F(s) + F(t) - F(np.abs(t - s)))
    elif k == "BiFBM":
        H, K = p["H"], p["K"]
        out = 2.0**-K * (_pow(_pow(s, 2 * H) + _pow(t, 2 * H), K) - _pow(np.abs(t - s), 2 * H * K))
    elif k in ("OU", "FractionalOU", "Spectral"):
        out = _stationary_k(m, t - s)
    elif k in SERIES_KINDS:
        out = _series_eval(m, s, t)
    else:
        raise TypeError(f"unknown kind {k}")
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def _series_eval(m, s, t):
    n = m.n_cov
    a = series_coeffs(m)
    flat_s, flat_t = s.reshape(-1), t.reshape(-1)
    out = np.zeros(flat_s.shape)
    step = max(1, (1 << 22) // max(1, flat_s.size))
    for k0 in range(1, n + 1, step):
        kk = np.arange(k0, min(n, k0 + step - 1) + 1)
        if m.kind == "SHESpatialDirichlet":
            out += (np.sin(np.outer(flat_s, kk) / 2) * np.sin(np.outer(flat_t, kk) / 2)) @ a(kk)
        else:
            ks, kt = np.outer(flat_s, kk), np.outer(flat_t, kk)
            out += (np.sin(ks) * np.sin(kt)) @ a(kk) + (np.cos(ks) * np.cos(kt)) @ a(-kk)
    if m.kind != "SHESpatialDirichlet":
        out += a.a0 / 4
    return out.reshape(s.shape)


def gram_rect(m: CovarianceModel, p, q) -> np.ndarray:
    """Matrix ``R(p_i, q_j)``; series kinds use the factorised form."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if m.kind in SERIES_KINDS:
        _check_domain(m, p, q)
        return feature_matrix(m, p) @ feature_matrix(m, q).T
    return eval_cov(m, p[:, None], q[None, :])


def rect_increment(m: CovarianceModel, r: Rectangle) -> float:
    s, t, u, v = r.s.lo, r.s.hi, r.u.lo, r.u.hi
    vals = eval_cov(m, np.array([s, s, t, t]), np.array([u, v, u, v]))
    return float(vals[0] - vals[1] - vals[2] + vals[3])


def increment_matrix(G: np.ndarray) -> np.ndarray:
    """Cell increments of a grid function ``G[i, j] = R(p_i, q_j)``."""
    return G[1:, 1:] - G[:-1, 1:] - G[1:, :-1] + G[:-1, :-1]


def sigma2(m: CovarianceModel, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if m.kind == "StationaryF":
        _check_domain(m, s, t)
        out = np.asarray(m.params["F"](np.abs(t - s)), dtype=float)
        return out if out.ndim else float(out)
    if m.kind in ("OU", "FractionalOU", "Spectral"):
        _check_domain(m, s, t)
        lag = np.abs(np.broadcast_to(t - s, np.broadcast(s, t).shape))
        if m.kind == "OU":
            out = 2 * (1 - np.exp(-m.params["lam"] * lag))
        else:
            dens = m.params["density"] if m.kind == "FractionalOU" else m.params["f"]
            out = np.asarray(fourier.spectral_sigma2(dens, lag), dtype=float)
        return out if out.ndim else float(out)
    out = eval_cov(m, s, s) + eval_cov(m, t, t) - 2 * eval_cov(m, s, t)
    return out


def gram(m: CovarianceModel, points, check_psd: bool = True) -> np.ndarray:
    """Symmetric covariance matrix on ``points``.

    A negative eigenvalue below ``-1e-10`` (relative to the largest) triggers
    one ridge retry with ``1e-12 I`` before ``NotPSD`` is raised.
    """
    p = np.asarray(points, dtype=float).reshape(-1)
    G = gram_rect(m, p, p)
    G = 0.5 * (G + G.T)
    if check_psd and len(p) > 1:
        scale = max(1.0, float(np.max(np.abs(np.diag(G)))))
        lam_min = float(np.linalg.eigvalsh(G)[0])
        if lam_min < -1e-10 * scale:
            G = G + 1e-12 * np.eye(len(p))
            lam_min = float(np.linalg.eigvalsh(G)[0])
            if lam_min < -1e-10 * scale:
                raise NotPSD(f"{m.tag}: minimum eigenvalue {lam_min:.3e}")
    return G


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_F_RULES = {
    "power": lambda p: (lambda x: np.abs(x) ** p.get("p", 0.8)),
    "expdecay": lambda p: (lambda x: 1 - np.exp(-p.get("lam", 1.0) * np.abs(x))),
    "square": lambda p: (lambda x: np.asarray(x, dtype=float) ** 2),
}


def coeffs_from_section(sec: dict) -> CoefficientSequence:
    """``[coeffs]`` section: ``rule`` in {power_law, she_dirichlet} plus parameters."""
    rule = sec.get("rule", "power_law")
    k_max = int(float(sec.get("k_max", 10**6)))
    if rule == "power_law":
        return fourier.power_law(
            float(sec.get("exponent", 1.8)), float(sec.get("scale", 1.0)), float(sec.get("a0", 0.0)), k_max
        )
    if rule == "she_dirichlet":
        return fourier.she_dirichlet_coeffs(float(sec["alpha"]), k_max)
    raise ValueError(f"unknown coefficient rule {rule!r}")


def model_from_section(sec: dict, coeffs: Optional[dict] = None) -> CovarianceModel:
    """Build a model from a ``[model]`` config section (string values)."""
    kind = sec.get("kind")
    params = {k[len("params."):]: v for k, v in sec.items() if k.startswith("params.")}
    num = {k: float(v) for k, v in params.items() if _is_number(v)}
    trunc = TruncationPolicy(
        n_cov=int(float(sec.get("n_cov", 4096))),
        tail_tol=float(sec.get("tail_tol", 1e-10)),
        strict="tail_tol" in sec,
    )
    T = None
    if "domain" in sec:
        lo, hi = (float(x) for x in str(sec["domain"]).replace("[", "").replace("]", "").split(","))
        T = hi
        if lo != 0.0 and kind != "StationaryF":
            raise ValueError("catalog kinds start at 0")
    T = T or 1.0
    if kind == "FBM":
        m = fbm(num["H"], T)
    elif kind == "BrownianBridge":
        m = brownian_bridge(num.get("T", T))
    elif kind == "OU":
        m = ou(num["lam"], T)
    elif kind == "FractionalOU":
        m = fractional_ou(num["H"], num.get("lam", 1.0), T)
    elif kind == "BiFBM":
        m = bifbm(num["H"], num["K"], T)
    elif kind == "StationaryF":
        name = params.get("F", "power")
        if name not in _F_RULES:
            raise ValueError(f"unknown F rule {name!r}")
        regime = params.get("regime", "concave" if name != "square" else "convex")
        m = stationary_f(_F_RULES[name](num), (0.0, T), num.get("rho", 1.0), regime)
    elif kind == "RFS":
        m = rfs(coeffs_from_section(coeffs or {}), trunc)
    elif kind == "SHESpatialDirichlet":
        m = she_dirichlet(num["alpha"], trunc)
    elif kind == "SHESpatialPeriodic":
        m = she_periodic(num["alpha"], num.get("lam", 1.0), num.get("color", 0.0), trunc)
    elif kind == "Spectral":
        dens = params.get("density", "fractional_ou")
        if dens == "fractional_ou":
            f = fourier.fractional_ou_density(num.get("H", 0.4), num.get("lam", 1.0))
        elif dens == "whole_line_she":
            f = fourier.whole_line_she_density(num.get("alpha", 0.9), num.get("lam", 1.0))
        else:
            raise ValueError(f"unknown density {dens!r}")
        m = spectral(f, T, params.get("regime"))
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    if "rho" in sec:
        m = replace(m, nominal_rho=float(sec["rho"]))
    return m


def _is_number(v) -> bool:
    try:
        float(v)
        return True
    except (TypeError, ValueError):
        return False
