"""Log-log regression used by every rate and scaling experiment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateFit(ValueError):
    """Fewer than four usable points, or non-positive data."""


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    points: list = field(default_factory=list)  # (x, y, se) triples
    points_used: int = 0

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "points": [list(p) for p in self.points],
            "points_used": self.points_used,
        }


def loglog_fit(x, y, se=None, min_points=4) -> RateFit:
    """Ordinary least squares of ``log y`` against ``log x``.

    ``se`` is carried along for reporting only; the fit is unweighted.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if se is None:
        se = np.full_like(x, np.nan)
    se = np.asarray(se, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateFit("x and y must be 1-d arrays of equal length")
    if len(x) < min_points:
        raise DegenerateFit(f"need at least {min_points} points, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DegenerateFit("log-log fit needs strictly positive finite data")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    pts = [(float(a), float(b), float(c)) for a, b, c in zip(x, y, se)]
    return RateFit(float(slope), float(intercept), r2, pts, len(x))
