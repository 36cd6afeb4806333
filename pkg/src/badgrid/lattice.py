"""Certified enumeration of affine-lattice points in a coordinate box.

A :class:`Frame` describes the point set ``scale * (B0 k + v0)`` for integer
``k``, where ``B0`` and ``v0`` are exact rationals over a common denominator
and ``scale`` is a float vector (the diagonal flow acts only on ``scale``).

:func:`box_points` returns every point inside a box. The coefficient box is
derived from the exact inverse of a reduced basis, so the result is complete
regardless of how good the reduction is; the reduction only keeps the
coefficient box small.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import BudgetError, DimensionError

_INT64_SAFE = 1 << 62
DEFAULT_BUDGET = 2_000_000
BOX_SLACK = 1e-9


def default_budget() -> int:
    env = os.environ.get("BADGRID_BUDGET")
    if env:
        try:
            return max(1, int(float(env)))
        except ValueError:
            pass
    return DEFAULT_BUDGET


def _lcm(values) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


# integral LLL -------------------------------------------------------------

def lll_columns(cols: list[list[int]], delta: Fraction = Fraction(99, 100)) -> list[list[int]]:
    """Integral LLL on linearly independent integer column vectors.

    Returns ``H`` (as a list of columns) such that the reduced basis is
    ``sum_i H[k][i] * cols[i]``. All arithmetic is exact.
    """
    n = len(cols)
    b = [list(c) for c in cols]
    H = [[int(i == j) for i in range(n)] for j in range(n)]
    if n <= 1:
        return H
    dot = lambda u, v: sum(x * y for x, y in zip(u, v))
    p, q = delta.numerator, delta.denominator
    # 1-based bookkeeping as in the textbook integral version
    dd = [1] + [0] * n
    lam = [[0] * (n + 1) for _ in range(n + 1)]

    def red(k, l):
        if 2 * abs(lam[k][l]) > dd[l]:
            r = (2 * lam[k][l] + dd[l]) // (2 * dd[l])
            bk, bl = b[k - 1], b[l - 1]
            for i in range(len(bk)):
                bk[i] -= r * bl[i]
            hk, hl = H[k - 1], H[l - 1]
            for i in range(n):
                hk[i] -= r * hl[i]
            lam[k][l] -= r * dd[l]
            for i in range(1, l):
                lam[k][i] -= r * lam[l][i]

    def swap(k, kmax):
        b[k - 1], b[k - 2] = b[k - 2], b[k - 1]
        H[k - 1], H[k - 2] = H[k - 2], H[k - 1]
        for j in range(1, k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (dd[k - 2] * dd[k] + lm * lm) // dd[k - 1]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (dd[k] * lam[i][k - 1] - lm * t) // dd[k - 1]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // dd[k]
        dd[k - 1] = B

    dd[1] = dot(b[0], b[0])
    k, kmax = 2, 1
    guard = 0
    while k <= n:
        guard += 1
        if guard > 100000:
            break
        if k > kmax:
            kmax = k
            for j in range(1, k + 1):
                u = dot(b[k - 1], b[j - 1])
                for i in range(1, j):
                    u = (dd[i] * u - lam[k][i] * lam[j][i]) // dd[i - 1]
                if j < k:
                    lam[k][j] = u
                else:
                    dd[k] = u
            if dd[k] == 0:
                raise DimensionError("dependent vectors in reduction")
        red(k, k - 1)
        if q * dd[k] * dd[k - 2] < p * dd[k - 1] ** 2 - q * lam[k][k - 1] ** 2:
            swap(k, kmax)
            k = max(2, k - 1)
        else:
            for l in range(k - 2, 0, -1):
                red(k, l)
            k += 1
    return H


def _inverse_fraction(M: list[list[int]]) -> list[list[Fraction]]:
    """Exact inverse of a nonsingular integer (or rational) matrix."""
    d = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(d)] for i, row in enumerate(M)]
    for col in range(d):
        piv = next((r for r in range(col, d) if A[r][col] != 0), None)
        if piv is None:
            raise DimensionError("singular basis")
        A[col], A[piv] = A[piv], A[col]
        pv = A[col][col]
        A[col] = [x / pv for x in A[col]]
        for r in range(d):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[d:] for row in A]


# frames -------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    """Exact rational basis and shift over a common denominator, plus a float scale."""

    basis_num: tuple[tuple[int, ...], ...]
    shift_num: tuple[int, ...]
    den: int
    scale: tuple[float, ...]

    @classmethod
    def from_fractions(cls, basis, shift=None, scale=None) -> "Frame":
        rows = [[Fraction(x) for x in row] for row in basis]
        d = len(rows)
        if any(len(row) != d for row in rows):
            raise DimensionError("basis must be square")
        sh = [Fraction(x) for x in shift] if shift is not None else [Fraction(0)] * d
        if len(sh) != d:
            raise DimensionError("shift length must match basis")
        den = _lcm([x.denominator for row in rows for x in row] + [x.denominator for x in sh])
        bn = tuple(tuple(int(x * den) for x in row) for row in rows)
        sn = tuple(int(x * den) for x in sh)
        sc = tuple(float(x) for x in scale) if scale is not None else (1.0,) * d
        if len(sc) != d:
            raise DimensionError("scale length must match basis")
        return cls(bn, sn, den, sc)

    @property
    def d(self) -> int:
        return len(self.shift_num)

    def with_scale(self, scale: Sequence[float]) -> "Frame":
        return Frame(self.basis_num, self.shift_num, self.den, tuple(float(x) for x in scale))

    def basis_fractions(self) -> list[list[Fraction]]:
        return [[Fraction(x, self.den) for x in row] for row in self.basis_num]

    def shift_fractions(self) -> list[Fraction]:
        return [Fraction(x, self.den) for x in self.shift_num]

    def det_exact(self) -> Fraction:
        B = self.basis_fractions()
        d = len(B)
        A = [row[:] for row in B]
        det = Fraction(1)
        for col in range(d):
            piv = next((r for r in range(col, d) if A[r][col] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != col:
                A[col], A[piv] = A[piv], A[col]
                det = -det
            det *= A[col][col]
            for r in range(col + 1, d):
                f = A[r][col] / A[col][col]
                if f:
                    A[r] = [x - f * y for x, y in zip(A[r], A[col])]
        return det

    def shift_is_lattice_point(self) -> bool:
        inv = _inverse_fraction([list(r) for r in self.basis_num])
        return all((sum(w * s for w, s in zip(row, self.shift_num))).denominator == 1 for row in inv)


@dataclass
class BoxPoints:
    """Points found in a box: integer coefficients, float coordinates, exact-zero mask."""

    coeffs: np.ndarray
    points: np.ndarray
    is_zero: np.ndarray

    def __len__(self):
        return len(self.points)


def _as_int_array(rows, bound: int):
    dtype = np.int64 if bound < _INT64_SAFE else object
    return np.array(rows, dtype=dtype)


def _reduce_for_box(frame: Frame, c: np.ndarray):
    """Unimodular U making the columns of diag(1/c) B0 U short."""
    d = frame.d
    B = np.array([[float(Fraction(x, frame.den)) for x in row] for row in frame.basis_num])
    sign, logdet = np.linalg.slogdet(B)
    log2det = logdet / math.log(2) if sign != 0 else 0.0
    P = int(math.ceil(50 + (float(np.sum(np.log2(c))) - log2det) / d))
    # keep every nonzero entry representable, otherwise thin directions collapse
    with np.errstate(divide="ignore"):
        lg = np.log2(np.abs(B)) - np.log2(c)[:, None]
    finite = lg[np.isfinite(lg)]
    if finite.size:
        P = max(P, int(math.ceil(30 - float(finite.min()))))
    pow2 = Fraction(2) ** P
    cfr = [Fraction(float(x)) for x in c]
    cols = []
    for j in range(d):
        col = []
        for i in range(d):
            col.append(round(Fraction(frame.basis_num[i][j], frame.den) * pow2 / cfr[i]))
        cols.append(col)
    if any(all(x == 0 for x in col) for col in cols):
        return [[int(i == j) for i in range(d)] for j in range(d)]
    try:
        Hcols = lll_columns(cols)
    except DimensionError:
        return [[int(i == j) for i in range(d)] for j in range(d)]
    # U[i][j] = Hcols[j][i]
    return [[Hcols[j][i] for j in range(d)] for i in range(d)]


def box_points(frame: Frame, half_widths: Sequence[float], budget: int | None = None) -> BoxPoints:
    """All points ``v = scale * (B0 k + v0)`` with ``|v_i| <= half_widths_i`` (up to a 1e-9 relative slack).

    Raises :class:`BudgetError` if the certified coefficient box holds more
    than ``budget`` candidates.
    """
    budget = default_budget() if budget is None else int(budget)
    d = frame.d
    h = np.asarray(half_widths, dtype=float)
    scale = np.asarray(frame.scale, dtype=float)
    if h.shape != (d,):
        raise DimensionError(f"expected {d} half-widths")
    empty = BoxPoints(np.zeros((0, d), dtype=np.int64), np.zeros((0, d)), np.zeros(0, dtype=bool))
    if np.any(h <= 0) or not np.all(np.isfinite(h)):
        return empty
    c = h / scale
    U = _reduce_for_box(frame, c)
    BU = [[sum(frame.basis_num[i][l] * U[l][j] for l in range(d)) for j in range(d)] for i in range(d)]
    Winv = _inverse_fraction(BU)  # (B0 U)^{-1} = den * Winv
    W = [[w * frame.den for w in row] for row in Winv]
    center = [-float(sum(w * s for w, s in zip(row, frame.shift_num))) for row in Winv]
    radius = [float(sum(abs(float(w)) * ci for w, ci in zip(row, c))) for row in W]
    lo, hi = [], []
    for cen, rad in zip(center, radius):
        margin = 1e-9 * (1.0 + rad + abs(cen))
        lo.append(math.ceil(cen - rad - margin))
        hi.append(math.floor(cen + rad + margin))
    counts = [b - a + 1 for a, b in zip(lo, hi)]
    if any(n <= 0 for n in counts):
        return empty
    total = math.prod(counts)
    if total > budget:
        raise BudgetError(f"enumeration needs {total} candidates, budget is {budget}")
    kmax = max(max(abs(a), abs(b)) for a, b in zip(lo, hi))
    grids = np.indices(counts).reshape(d, -1).T
    Kp = _as_int_array(grids, kmax) + _as_int_array(lo, kmax)

    bu_abs = max(abs(x) for row in BU for x in row)
    s_abs = max(abs(x) for x in frame.shift_num)
    bound = d * bu_abs * kmax + s_abs
    BUa = _as_int_array(BU, bound)
    Sa = _as_int_array(frame.shift_num, bound)
    if BUa.dtype == object or Kp.dtype == object:
        Kp = Kp.astype(object)
        BUa = BUa.astype(object)
        Sa = Sa.astype(object)
    Xnum = Kp @ BUa.T + Sa
    if Xnum.dtype == object:
        x = np.array([[int(v) / frame.den for v in row] for row in Xnum], dtype=float).reshape(Xnum.shape)
    else:
        x = Xnum.astype(float) / float(frame.den)
    pts = x * scale
    keep = np.all(np.abs(pts) <= h * (1 + BOX_SLACK), axis=1)
    Xnum, Kp, pts = Xnum[keep], Kp[keep], pts[keep]
    is_zero = np.all(Xnum == 0, axis=1) if len(Xnum) else np.zeros(0, dtype=bool)
    u_abs = max(abs(x) for row in U for x in row)
    Ua = _as_int_array(U, d * u_abs * kmax)
    if Ua.dtype == object or Kp.dtype == object:
        coeffs = Kp.astype(object) @ Ua.astype(object).T
    else:
        coeffs = Kp @ Ua.T
    return BoxPoints(coeffs, pts, np.asarray(is_zero, dtype=bool))


def short_vector_bound(frame: Frame) -> float:
    """Sup norm of the shortest column of a reduced basis: an upper bound for the first minimum."""
    d = frame.d
    c = 1.0 / np.asarray(frame.scale, dtype=float)
    U = _reduce_for_box(frame, c)
    best = math.inf
    for j in range(d):
        col = [sum(frame.basis_num[i][l] * U[l][j] for l in range(d)) for i in range(d)]
        v = max(abs(float(Fraction(x, frame.den)) * s) for x, s in zip(col, frame.scale))
        if v > 0:
            best = min(best, v)
    return best
