"""Exact input types: weight pairs, rational matrices and targets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, PrecisionError, PreconditionError

_INT64_SAFE = 1 << 62


def to_fraction(x) -> Fraction:
    """Parse "p/q", decimal strings, ints, Fractions and floats (exactly)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise PreconditionError(f"non-finite entry {x!r}")
        return Fraction(float(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise PreconditionError(f"cannot parse rational {x!r}") from exc
    raise PreconditionError(f"unsupported numeric type {type(x).__name__}")


def _lcm(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


@dataclass(frozen=True)
class Weights:
    """The weight pair (r, s); r acts on R^m, s on R^n."""

    r: tuple[Fraction, ...]
    s: tuple[Fraction, ...]

    def __post_init__(self):
        r = tuple(to_fraction(x) for x in self.r)
        s = tuple(to_fraction(x) for x in self.s)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        for name, w in (("r", r), ("s", s)):
            if not w:
                raise PreconditionError(f"weight vector {name} is empty")
            if any(x <= 0 for x in w):
                raise PreconditionError(f"weights {name} must be positive")
            if any(a < b for a, b in zip(w, w[1:])):
                raise PreconditionError(f"weights {name} must be non-increasing")
            if sum(w) != 1:
                raise PreconditionError(f"weights {name} must sum to 1 (got {sum(w)})")

    @classmethod
    def unweighted(cls, m: int, n: int) -> "Weights":
        return cls((Fraction(1, m),) * m, (Fraction(1, n),) * n)

    @property
    def m(self) -> int:
        return len(self.r)

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def d(self) -> int:
        return self.m + self.n

    @property
    def delta(self) -> Fraction:
        return min(self.r + self.s)

    @property
    def is_unweighted(self) -> bool:
        return len(set(self.r)) == 1 and len(set(self.s)) == 1

    @property
    def rf(self) -> np.ndarray:
        return np.array([float(x) for x in self.r])

    @property
    def sf(self) -> np.ndarray:
        return np.array([float(x) for x in self.s])

    def swapped(self) -> "Weights":
        """Weights for the transposed problem: roles of (m, r) and (n, s) exchanged."""
        return Weights(self.s, self.r)

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "r": [str(x) for x in self.r], "s": [str(x) for x in self.s]}


@dataclass(frozen=True)
class TargetVector:
    coords: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(to_fraction(x) for x in self.coords))

    def __len__(self):
        return len(self.coords)

    @classmethod
    def zeros(cls, m: int) -> "TargetVector":
        return cls((Fraction(0),) * m)

    def as_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.coords])


@dataclass(frozen=True)
class ExactMatrix:
    """A rows x cols matrix of exact rationals with a declared precision horizon.

    The horizon is the largest quasinorm radius of integer vectors at which the
    rational truncation is still taken as faithful; enumerations past it raise
    :class:`PrecisionError`.
    """

    entries: tuple[tuple[Fraction, ...], ...]
    precision_horizon: int | None = None
    _den: int = field(init=False, repr=False, compare=False)
    _num: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(to_fraction(x) for x in row) for row in self.entries)
        if not rows or not rows[0]:
            raise DimensionError("matrix must have at least one row and one column")
        if any(len(row) != len(rows[0]) for row in rows):
            raise DimensionError("ragged matrix")
        object.__setattr__(self, "entries", rows)
        den = _lcm(x.denominator for row in rows for x in row)
        object.__setattr__(self, "_den", den)
        object.__setattr__(self, "_num", tuple(tuple(int(x * den) for x in row) for row in rows))
        horizon = self.precision_horizon
        if horizon is None:
            # a truncation with denominator D resolves <qA> down to ~1/q while q <~ sqrt(D)
            horizon = max(1, math.isqrt(den)) if den > 1 else 10**18
        horizon = int(horizon)
        if horizon <= 0:
            raise PreconditionError("precision_horizon must be positive")
        object.__setattr__(self, "precision_horizon", horizon)

    @classmethod
    def from_rows(cls, rows, precision_horizon=None) -> "ExactMatrix":
        return cls(tuple(tuple(row) for row in rows), precision_horizon)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def denominator(self) -> int:
        return self._den

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix(tuple(zip(*self.entries)), self.precision_horizon)

    def as_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def check_horizon(self, radius: float, what: str = "enumeration radius") -> None:
        if radius > self.precision_horizon * (1 + 1e-12):
            raise PrecisionError(
                f"{what} {radius:.6g} exceeds precision horizon {self.precision_horizon}"
            )

    def residual_numerators(self, qs: np.ndarray, target: TargetVector | None = None):
        """Centered integer numerators r and denominator D with (A q - b) - round(A q - b) = r / D.

        ``qs`` is an (N, cols) integer array. Returns r as an (N, rows) array
        (int64 when safe, otherwise Python ints) and the common denominator D.
        """
        qs = np.asarray(qs)
        if qs.ndim == 1:
            qs = qs.reshape(1, -1)
        if qs.shape[1] != self.cols:
            raise DimensionError(f"expected vectors of length {self.cols}, got {qs.shape[1]}")
        if target is not None and len(target) != self.rows:
            raise DimensionError(f"target has length {len(target)}, matrix has {self.rows} rows")
        den = self._den
        num = self._num
        bnum = (0,) * self.rows
        if target is not None and any(target.coords):
            tden = _lcm(x.denominator for x in target.coords)
            lcm = _lcm((den, tden))
            num = tuple(tuple(x * (lcm // den) for x in row) for row in num)
            bnum = tuple(int(x * lcm) for x in target.coords)
            den = lcm
        qmax = int(np.abs(qs).max()) if qs.size else 0
        bound = max(sum(abs(x) for x in row) for row in num) * qmax + max(abs(x) for x in bnum) + den
        if bound < _INT64_SAFE:
            P = np.array(num, dtype=np.int64)
            acc = qs.astype(np.int64) @ P.T - np.array(bnum, dtype=np.int64)
            rem = np.mod(acc, den)
            rem = np.where(2 * rem > den, rem - den, rem)
        else:
            P = np.array(num, dtype=object)
            acc = qs.astype(object) @ P.T - np.array(bnum, dtype=object)
            rem = acc % den
            rem = np.where(2 * rem > den, rem - den, rem)
        return rem, den

    def residuals(self, qs: np.ndarray, target: TargetVector | None = None) -> np.ndarray:
        """Signed nearest-integer residuals of A q - b as floats, rounded once from exact values."""
        rem, den = self.residual_numerators(qs, target)
        return _exact_ratio(rem, den)


def _exact_ratio(num, den: int) -> np.ndarray:
    if num.dtype == object:
        return (num / den).astype(float)
    if den < (1 << 53):
        return num.astype(float) / float(den)
    return np.array([[int(x) / den for x in row] for row in num], dtype=float).reshape(num.shape)


def parse_problem(doc: dict):
    """Parse the JSON problem document into (Weights, ExactMatrix, TargetVector | None)."""
    try:
        m, n = int(doc["m"]), int(doc["n"])
    except KeyError as exc:
        raise PreconditionError(f"missing field {exc.args[0]!r}") from exc
    r = doc.get("r") or [Fraction(1, m)] * m
    s = doc.get("s") or [Fraction(1, n)] * n
    if len(r) != m or len(s) != n:
        raise DimensionError("weight vector lengths must equal m and n")
    W = Weights(tuple(r), tuple(s))
    A = None
    if "A" in doc:
        A = ExactMatrix.from_rows(doc["A"], doc.get("precision_horizon"))
        if A.shape != (m, n):
            raise DimensionError(f"A has shape {A.shape}, expected {(m, n)}")
    b = None
    if doc.get("b") is not None:
        b = TargetVector(tuple(doc["b"]))
        if len(b) != m:
            raise DimensionError(f"b has length {len(b)}, expected {m}")
    return W, A, b


def check_lengths(x: Sequence, w: Sequence) -> None:
    if len(x) != len(w):
        raise DimensionError(f"vector of length {len(x)} vs weights of length {len(w)}")
