"""Weighted quasinorms, evaluated in the log domain.

Exponents 1/r_i are generally irrational, so every magnitude is carried as a
natural log (``-inf`` for zero) and compared with an explicit tolerance.
Comparisons that land inside the tolerance band are reported as
``MARGINAL`` instead of being resolved silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .weights import Weights, check_lengths

DEFAULT_TOL = 1e-12
MARGINAL = "marginal"


def log_abs(x) -> float:
    """Natural log of |x|, exact-rational aware (no underflow for tiny Fractions)."""
    if isinstance(x, Fraction):
        if x == 0:
            return -math.inf
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    x = abs(float(x))
    return math.log(x) if x > 0 else -math.inf


@dataclass(frozen=True, order=False)
class QuasinormValue:
    log_value: float
    tolerance: float = DEFAULT_TOL

    @classmethod
    def of(cls, value: float, tolerance: float = DEFAULT_TOL) -> "QuasinormValue":
        return cls(log_abs(value), tolerance)

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value > -math.inf else 0.0

    @property
    def is_zero(self) -> bool:
        return self.log_value == -math.inf

    def compare(self, other) -> int | str:
        """-1, 0 (exactly equal), +1, or MARGINAL when within tolerance but not equal."""
        other_log = other.log_value if isinstance(other, QuasinormValue) else log_abs(other)
        if self.log_value == other_log:
            return 0
        diff = self.log_value - other_log
        if abs(diff) <= self.tolerance:
            return MARGINAL
        return -1 if diff < 0 else 1

    def __mul__(self, other: "QuasinormValue") -> "QuasinormValue":
        return QuasinormValue(self.log_value + other.log_value, self.tolerance)

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"QuasinormValue({self.value:.12g})"


def _log_terms(x: Sequence, w: Sequence) -> np.ndarray:
    return np.array([log_abs(xi) / float(wi) for xi, wi in zip(x, w)])


def weighted_quasinorm(x: Sequence, w: Sequence) -> QuasinormValue:
    """max_i |x_i|^(1/w_i)."""
    check_lengths(x, w)
    if any(float(wi) <= 0 for wi in w):
        raise DimensionError("weights must be positive")
    return QuasinormValue(float(np.max(_log_terms(x, w))))


def idist(x: Sequence, w: Sequence) -> QuasinormValue:
    """Quasinorm distance to the nearest integer vector.

    The quasinorm is a max of per-coordinate terms, so the infimum over Z^m
    is attained by rounding each coordinate independently.
    """
    check_lengths(x, w)
    res = [xi - round(xi) if isinstance(xi, Fraction) else float(xi) - np.rint(float(xi)) for xi in x]
    return weighted_quasinorm(res, w)


def rs_matrix_quasinorm(A, W: Weights) -> QuasinormValue:
    """max_ij |A_ij|^(1/(r_i + s_j))."""
    rows = A.entries if hasattr(A, "entries") else A
    if len(rows) != W.m or any(len(row) != W.n for row in rows):
        raise DimensionError(f"matrix must be {W.m}x{W.n}")
    logs = [
        log_abs(a) / float(ri + sj)
        for row, ri in zip(rows, W.r)
        for a, sj in zip(row, W.s)
    ]
    return QuasinormValue(max(logs))


def grid_vector_quasinorm(v: Sequence, W: Weights) -> QuasinormValue:
    """max(||x||_r^(d/m), ||y||_s^(d/n)) for v = (x, y)."""
    if len(v) != W.d:
        raise DimensionError(f"vector of length {len(v)}, expected d = {W.d}")
    x, y = v[: W.m], v[W.m :]
    lx = float(np.max(_log_terms(x, W.r))) * W.d / W.m
    ly = float(np.max(_log_terms(y, W.s))) * W.d / W.n
    return QuasinormValue(max(lx, ly))


# vectorised helpers used by the enumerators -------------------------------

def log_quasinorm_rows(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row-wise log ||x||_w for a float array of shape (N, len(w))."""
    with np.errstate(divide="ignore"):
        return np.max(np.log(np.abs(X)) / w, axis=1) if X.shape[1] else np.full(len(X), -np.inf)


def log_rs_rows(V: np.ndarray, W: Weights) -> np.ndarray:
    """Row-wise log ||v||_{r,s} for grid vectors."""
    lx = log_quasinorm_rows(V[:, : W.m], W.rf) * (W.d / W.m)
    ly = log_quasinorm_rows(V[:, W.m :], W.sf) * (W.d / W.n)
    return np.maximum(lx, ly)


def rs_box(beta_log: float, W: Weights) -> np.ndarray:
    """Half-widths of the coordinate box containing {v : ||v||_{r,s} <= exp(beta_log)}."""
    ex = np.concatenate([W.rf * W.m / W.d, W.sf * W.n / W.d])
    return np.exp(beta_log * ex)


def quasi_triangle_constant(w: Sequence) -> float:
    """2^((1 - w_min)/w_min): constant in ||x + x'|| <= C (||x|| + ||x'||)."""
    wmin = float(min(w))
    return 2.0 ** ((1 - wmin) / wmin)
