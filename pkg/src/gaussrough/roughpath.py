"""Truncated tensor algebra, signatures and rough path distances.

Tensors are batched: level ``i`` is stored flat with shape
``batch + (d**i,)`` so a whole ensemble of paths (and all grid times) is
processed with a handful of array operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .variation import pvar_power_dist

MAX_LEVEL = 5
MAX_DIM = 4


class DimensionMismatch(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class TruncatedTensor:
    """Element of ``T^N(R^d)``, possibly batched."""

    __slots__ = ("d", "N", "levels")

    def __init__(self, d: int, N: int, levels):
        if not (1 <= d <= MAX_DIM and 1 <= N <= MAX_LEVEL):
            raise DimensionMismatch(f"need d <= {MAX_DIM} and N <= {MAX_LEVEL}, got d={d}, N={N}")
        if len(levels) != N + 1:
            raise DimensionMismatch("need one array per level 0..N")
        self.d, self.N = d, N
        self.levels = [np.asarray(x, dtype=float) for x in levels]
        batch = self.levels[0].shape
        for i, x in enumerate(self.levels[1:], 1):
            if x.shape != batch + (d**i,):
                raise DimensionMismatch(f"level {i} has shape {x.shape}, expected {batch + (d**i,)}")

    @property
    def batch(self):
        return self.levels[0].shape

    @classmethod
    def zeros(cls, d, N, batch=()):
        return TruncatedTensor(d, N, [np.zeros(batch)] + [np.zeros(batch + (d**i,)) for i in range(1, N + 1)])

    @classmethod
    def identity(cls, d, N, batch=()):
        levels = [np.ones(batch)] + [np.zeros(batch + (d**i,)) for i in range(1, N + 1)]
        return cls(d, N, levels)

    def level(self, i: int) -> np.ndarray:
        """Level ``i`` unflattened to ``batch + (d,)*i``."""
        return self.levels[i].reshape(self.batch + (self.d,) * i)

    def __getitem__(self, idx):
        return type(self)(self.d, self.N, [x[idx] for x in self.levels])

    def _same(self, other):
        if (self.d, self.N) != (other.d, other.N):
            raise DimensionMismatch("tensors differ in dimension or level")

    def __add__(self, other):
        self._same(other)
        return TruncatedTensor(self.d, self.N, [a + b for a, b in zip(self.levels, other.levels)])

    def __sub__(self, other):
        self._same(other)
        return TruncatedTensor(self.d, self.N, [a - b for a, b in zip(self.levels, other.levels)])

    def scale(self, c):
        c = np.asarray(c, dtype=float)
        return TruncatedTensor(self.d, self.N, [c * self.levels[0]] + [c[..., None] * x for x in self.levels[1:]])

    def __mul__(self, other):
        return tensor_mul(self, other)

    def max_abs_diff(self, other) -> float:
        self._same(other)
        return max(float(np.max(np.abs(a - b))) if a.size else 0.0 for a, b in zip(self.levels, other.levels))

    def __repr__(self):
        return f"TruncatedTensor(d={self.d}, N={self.N}, batch={self.batch})"


class GroupElement(TruncatedTensor):
    """Truncated tensor with scalar part 1."""

    __slots__ = ()

    def __init__(self, d, N, levels, check: bool = True):
        super().__init__(d, N, levels)
        if check and not np.allclose(self.levels[0], 1.0, atol=1e-12):
            raise ValueError("group elements have scalar part 1")

    def __getitem__(self, idx):
        return GroupElement(self.d, self.N, [x[idx] for x in self.levels], check=False)


def _as_group(t: TruncatedTensor) -> GroupElement:
    return GroupElement(t.d, t.N, t.levels, check=False)


def _outer(x, y):
    batch = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    return (x[..., :, None] * y[..., None, :]).reshape(batch + (x.shape[-1] * y.shape[-1],))


def tensor_mul(x: TruncatedTensor, y: TruncatedTensor) -> TruncatedTensor:
    """Graded product truncated at level N."""
    x._same(y)
    d, N = x.d, x.N
    out = []
    for k in range(N + 1):
        acc = x.levels[0] * y.levels[0] if k == 0 else None
        if k:
            acc = x.levels[0][..., None] * y.levels[k] + y.levels[0][..., None] * x.levels[k]
            for i in range(1, k):
                acc = acc + _outer(x.levels[i], y.levels[k - i])
        out.append(acc)
    cls = GroupElement if isinstance(x, GroupElement) and isinstance(y, GroupElement) else TruncatedTensor
    if cls is GroupElement:
        return GroupElement(d, N, out, check=False)
    return TruncatedTensor(d, N, out)


def _powers(x: TruncatedTensor):
    """Levels of ``x^n`` for ``n = 1..N`` where ``x`` has zero scalar part."""
    cur = x
    yield 1, cur
    for n in range(2, x.N + 1):
        cur = tensor_mul(cur, x)
        yield n, cur


def texp(v, N: int) -> GroupElement:
    """``exp(v) = Σ v^{⊗i} / i!`` for a (batched) level-1 vector ``v``."""
    v = np.asarray(v, dtype=float)
    d = v.shape[-1]
    batch = v.shape[:-1]
    levels = [np.ones(batch), v]
    cur = v
    for i in range(2, N + 1):
        cur = _outer(cur, v) / i
        levels.append(cur)
    return GroupElement(d, N, levels, check=False)


def tlog(g: TruncatedTensor) -> TruncatedTensor:
    """Truncated logarithm of an element with scalar part 1."""
    x = TruncatedTensor(g.d, g.N, [np.zeros(g.batch)] + g.levels[1:])
    out = TruncatedTensor.zeros(g.d, g.N, g.batch)
    for n, xn in _powers(x):
        out = out + xn.scale((-1.0) ** (n + 1) / n)
    return out


def inverse(g: TruncatedTensor) -> GroupElement:
    """``g^{-1} = Σ_n (-x)^n`` with ``g = 1 + x``."""
    x = TruncatedTensor(g.d, g.N, [np.zeros(g.batch)] + [-a for a in g.levels[1:]])
    out = TruncatedTensor.identity(g.d, g.N, g.batch)
    for _, xn in _powers(x):
        out = out + xn
    return _as_group(out)


def dilation(g: TruncatedTensor, lam: float) -> TruncatedTensor:
    levels = [g.levels[0]] + [lam**i * x for i, x in enumerate(g.levels[1:], 1)]
    return type(g)(g.d, g.N, levels) if not isinstance(g, GroupElement) else GroupElement(g.d, g.N, levels, check=False)


def _root_norm(g: TruncatedTensor) -> np.ndarray:
    vals = [np.linalg.norm(x, axis=-1) ** (1.0 / i) for i, x in enumerate(g.levels[1:], 1)]
    return np.max(np.stack(vals), axis=0)


def hnorm(g: TruncatedTensor):
    """Symmetrised max-of-roots norm ``max(N(g), N(g^{-1}))``, ``N(g) = max_i |g_i|^{1/i}``.

    Homogeneous under dilation and subadditive, so it induces a genuine
    left-invariant metric equivalent to the Carnot-Caratheodory one.
    """
    out = np.maximum(_root_norm(g), _root_norm(inverse(g)))
    return out if np.ndim(out) else float(out)


def lie_defect(g: TruncatedTensor) -> float:
    """Distance of the symmetric part of level 2 from ``½ g_1 ⊗ g_1``."""
    if g.N < 2:
        return 0.0
    A = g.level(2)
    sym = 0.5 * (A + np.swapaxes(A, -1, -2))
    v = g.levels[1]
    return float(np.max(np.abs(sym - 0.5 * v[..., :, None] * v[..., None, :])))


# ---------------------------------------------------------------------------
# signatures of piecewise-linear paths
# ---------------------------------------------------------------------------


def _take(g: GroupElement, idx) -> GroupElement:
    """Index along the grid axis (last batch axis)."""
    levels = [x[..., idx] if k == 0 else x[..., idx, :] for k, x in enumerate(g.levels)]
    return GroupElement(g.d, g.N, levels, check=False)


@dataclass
class RoughPathRecord:
    grid: np.ndarray
    elements: GroupElement  # batch + (n,) along the grid
    beta: Optional[float] = None
    p: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.grid)

    def increment(self, i, j) -> GroupElement:
        """``g_{t_i}^{-1} ⊗ g_{t_j}``; ``i``, ``j`` may be index arrays."""
        return tensor_mul(inverse(_take(self.elements, i)), _take(self.elements, j))

    def end(self) -> GroupElement:
        return _take(self.elements, -1)


def signature(path, N: int, times=None, beta=None, p=None) -> RoughPathRecord:
    """Running Chen product of segment exponentials.

    ``path`` has shape ``(n, d)`` or ``(..., n, d)`` for an ensemble.
    """
    x = np.asarray(path, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape[-2], x.shape[-1]
    if n < 2:
        raise ValueError("need at least two path points")
    t = np.arange(n, dtype=float) if times is None else np.asarray(times, dtype=float)
    if len(t) != n:
        raise GridMismatch("times and path length differ")
    seg = texp(np.diff(x, axis=-2), N)  # batch + (n-1,)
    batch = x.shape[:-2]
    levels = [np.ones(batch + (n,))] + [np.zeros(batch + (n, d**i)) for i in range(1, N + 1)]
    cur = GroupElement.identity(d, N, batch)
    for k in range(n - 1):
        cur = tensor_mul(cur, _take(seg, k))
        for i in range(1, N + 1):
            levels[i][..., k + 1, :] = cur.levels[i]
    return RoughPathRecord(t, GroupElement(d, N, levels, check=False), beta, p)


def levy_area(record: RoughPathRecord, s: int = 0, t: int = -1) -> np.ndarray:
    """Antisymmetric part of level 2 of the increment between grid indices ``s`` and ``t``."""
    g = record.increment(s, t)
    A = g.level(2)
    return 0.5 * (A - np.swapaxes(A, -1, -2))


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def pair_indices(n: int, family: str = "all"):
    """Index pairs ``i < j``: every pair, or the dyadic intervals of a
    ``2^J + 1`` point grid."""
    if family == "all":
        i, j = np.triu_indices(n, 1)
        return i, j
    if family == "dyadic":
        J = int(round(math.log2(n - 1)))
        if 2**J + 1 != n:
            raise GridMismatch("dyadic pairs need 2^J + 1 grid points")
        ii, jj = [], []
        for lev in range(J + 1):
            step = 2 ** (J - lev)
            starts = np.arange(0, n - 1, step)
            ii.append(starts)
            jj.append(starts + step)
        return np.concatenate(ii), np.concatenate(jj)
    raise ValueError(f"unknown pair family {family!r}")


_EPS = np.finfo(float).eps


def mismatch_norm(gx: GroupElement, gy: GroupElement):
    """``hnorm(gx^{-1} ⊗ gy)`` with a rounding floor.

    Level-i mismatch norms below ``64 eps (1 + N(gx) + N(gy))^i`` are treated
    as zero; without the floor, the ``1/i``-th root turns rounding noise of
    size 1e-16 into spurious distances near 1e-5.
    """
    scale = 1.0 + _root_norm(gx) + _root_norm(gy)
    m = tensor_mul(inverse(gx), gy)
    out = np.zeros(np.broadcast_shapes(scale.shape, m.batch))
    for g in (m, inverse(m)):
        for i, x in enumerate(g.levels[1:], 1):
            v = np.linalg.norm(x, axis=-1)
            v = np.where(v <= 64 * _EPS * scale**i, 0.0, v)
            out = np.maximum(out, v ** (1.0 / i))
    return out


def _check_pair(X: RoughPathRecord, Y: RoughPathRecord):
    if X.n != Y.n or not np.allclose(X.grid, Y.grid):
        raise GridMismatch("records live on different grids")
    if (X.elements.d, X.elements.N) != (Y.elements.d, Y.elements.N):
        raise GridMismatch("records differ in dimension or level")


def _blocks(total, size=4096):
    for lo in range(0, total, size):
        yield slice(lo, min(total, lo + size))


def dist_homog(X: RoughPathRecord, Y: RoughPathRecord, flavor: str = "holder", beta=None, p=None, pairs="all"):
    """Homogeneous β-Hölder or p-variation distance on grid pairs.

    The mismatch on ``[s, t]`` is ``hnorm(X_{s,t}^{-1} ⊗ Y_{s,t})``.
    Returns one value per batch entry.
    """
    _check_pair(X, Y)
    t = X.grid
    if flavor == "holder":
        beta = X.beta if beta is None else beta
        if beta is None:
            raise ValueError("β-Hölder distance needs beta")
        I, J = pair_indices(X.n, pairs)
        best = np.zeros(X.elements.batch[:-1])
        for sl in _blocks(len(I)):
            mis = mismatch_norm(X.increment(I[sl], J[sl]), Y.increment(I[sl], J[sl]))
            best = np.maximum(best, np.max(mis / (t[J[sl]] - t[I[sl]]) ** beta, axis=-1))
        return best if np.ndim(best) else float(best)
    if flavor in ("pvar", "p-var"):
        p = X.p if p is None else p
        if p is None:
            raise ValueError("p-variation distance needs p")
        n = X.n
        I, J = pair_indices(n, "all")
        batch = X.elements.batch[:-1]
        D = np.zeros(batch + (n, n))
        mis = mismatch_norm(X.increment(I, J), Y.increment(I, J))
        D[..., I, J] = mis
        flat = D.reshape(-1, n, n)
        vals = np.array([pvar_power_dist(Dk, p) ** (1 / p) for Dk in flat]).reshape(batch)
        return vals if np.ndim(vals) else float(vals)
    raise ValueError(f"unknown flavor {flavor!r}")


def dist_inhomog(X: RoughPathRecord, Y: RoughPathRecord, beta: float, pairs="all"):
    """``max_i sup |X^i_{s,t} - Y^i_{s,t}| / |t-s|^{iβ}`` over grid pairs."""
    _check_pair(X, Y)
    t = X.grid
    I, J = pair_indices(X.n, pairs)
    best = np.zeros(X.elements.batch[:-1])
    for sl in _blocks(len(I)):
        gx, gy = X.increment(I[sl], J[sl]), Y.increment(I[sl], J[sl])
        h = t[J[sl]] - t[I[sl]]
        for i in range(1, gx.N + 1):
            diff = np.linalg.norm(gx.levels[i] - gy.levels[i], axis=-1) / h ** (i * beta)
            best = np.maximum(best, np.max(diff, axis=-1))
    return best if np.ndim(best) else float(best)


def identity_record(grid, d: int, N: int, batch=()) -> RoughPathRecord:
    n = len(grid)
    return RoughPathRecord(np.asarray(grid, dtype=float), GroupElement.identity(d, N, tuple(batch) + (n,)))
