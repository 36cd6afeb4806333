"""Grids (translated unimodular lattices), the diagonal flow and grid minima."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetError, DimensionError, PreconditionError
from .lattice import BoxPoints, Frame, box_points, short_vector_bound
from .quasinorm import DEFAULT_TOL, MARGINAL, QuasinormValue, log_rs_rows, rs_box
from .weights import ExactMatrix, TargetVector, Weights

DET_TOL = 1e-9


@dataclass(frozen=True)
class FlowElement:
    """a_t = diag(e^{r_i t}, e^{-s_j t})."""

    t: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise PreconditionError("flow time must be finite")

    def diagonal(self, W: Weights) -> np.ndarray:
        return np.exp(np.concatenate([W.rf * self.t, -W.sf * self.t]))


@dataclass(frozen=True)
class Grid:
    """The point set ``{basis k + shift : k in Z^d}``.

    Stored as an exact rational frame times a float diagonal, so flowing a
    grid never perturbs the rational data.
    """

    frame: Frame

    def __post_init__(self):
        det = float(self.frame.det_exact()) * float(np.prod(self.frame.scale))
        if abs(det - 1.0) > DET_TOL:
            raise PreconditionError(f"grid basis must have determinant 1 (got {det:.12g})")

    @classmethod
    def from_real(cls, basis, shift=None) -> "Grid":
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise DimensionError("basis must be a square matrix")
        d = basis.shape[0]
        shift = np.zeros(d) if shift is None else np.asarray(shift, dtype=float)
        rows = [[Fraction(float(x)) for x in row] for row in basis]
        return cls(Frame.from_fractions(rows, [Fraction(float(x)) for x in shift]))

    @classmethod
    def from_rational(cls, basis, shift=None, scale=None) -> "Grid":
        return cls(Frame.from_fractions(basis, shift, scale))

    @classmethod
    def standard(cls, d: int, shift=None) -> "Grid":
        return cls.from_rational([[int(i == j) for j in range(d)] for i in range(d)], shift)

    @property
    def d(self) -> int:
        return self.frame.d

    @property
    def basis(self) -> np.ndarray:
        B = np.array([[float(Fraction(x, self.frame.den)) for x in row] for row in self.frame.basis_num])
        return np.asarray(self.frame.scale)[:, None] * B

    @property
    def shift(self) -> np.ndarray:
        v = np.array([float(Fraction(x, self.frame.den)) for x in self.frame.shift_num])
        return np.asarray(self.frame.scale) * v

    @property
    def is_lattice(self) -> bool:
        return self.frame.shift_is_lattice_point()

    def points_in_box(self, half_widths, budget: int | None = None) -> BoxPoints:
        return box_points(self.frame, half_widths, budget)


def apply_flow(f: FlowElement | float, g: Grid, W: Weights) -> Grid:
    """a_t g: basis and shift both multiplied by a_t."""
    f = f if isinstance(f, FlowElement) else FlowElement(float(f))
    if g.d != W.d:
        raise DimensionError(f"grid dimension {g.d} does not match d = {W.d}")
    return Grid(g.frame.with_scale(np.asarray(g.frame.scale) * f.diagonal(W)))


def lift_point(A: ExactMatrix, b: TargetVector | None = None) -> Grid:
    """The grid with basis (I_m A; 0 I_n) and shift (-b, 0); x_A when b is absent."""
    m, n = A.shape
    d = m + n
    basis = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for i in range(m):
        for j in range(n):
            basis[i][m + j] = A.entries[i][j]
    shift = [Fraction(0)] * d
    if b is not None:
        if len(b) != m:
            raise DimensionError(f"target has length {len(b)}, expected {m}")
        shift[:m] = [-x for x in b.coords]
    return Grid.from_rational(basis, shift)


def flowed_lift(A: ExactMatrix, b: TargetVector | None, W: Weights, t: float) -> Grid:
    return apply_flow(FlowElement(t), lift_point(A, b), W)


@dataclass(frozen=True)
class GridMin:
    value: QuasinormValue
    witness: tuple[float, ...]
    coeffs: tuple[int, ...]
    search_log_beta: float
    certified: bool = True


def _lex_pick(coeffs: np.ndarray, idx: np.ndarray) -> int:
    return min(idx.tolist(), key=lambda i: tuple(int(x) for x in coeffs[i]))


def grid_min(
    g: Grid,
    W: Weights,
    exclude_zero: bool = True,
    budget: int | None = None,
    tol: float = DEFAULT_TOL,
) -> GridMin:
    """Minimal ||v||_{r,s} over grid points, certified by exhaustive box search.

    The search radius starts at beta = 1 and grows until a qualifying point
    exists; every point of quasinorm <= beta lies in the searched box, so the
    minimum found is global. Ties within ``tol`` go to the lexicographically
    smallest coefficient vector.
    """
    if g.d != W.d:
        raise DimensionError(f"grid dimension {g.d} does not match d = {W.d}")
    beta_log = 0.0
    best = None
    for _ in range(200):
        try:
            pts = g.points_in_box(rs_box(beta_log, W), budget)
        except BudgetError as exc:
            raise BudgetError(str(exc), best=best) from None
        mask = ~pts.is_zero if exclude_zero else np.ones(len(pts), dtype=bool)
        if mask.any():
            P, K = pts.points[mask], pts.coeffs[mask]
            logs = log_rs_rows(P, W)
            lmin = float(np.min(logs))
            near = np.flatnonzero(logs <= lmin + tol) if lmin > -math.inf else np.flatnonzero(logs == lmin)
            i = _lex_pick(K, near)
            return GridMin(
                QuasinormValue(lmin, tol),
                tuple(float(x) for x in P[i]),
                tuple(int(x) for x in K[i]),
                beta_log,
            )
        beta_log += math.log(4.0)
    raise BudgetError("no grid point found within search limits", best=best)


def in_L_epsilon(g: Grid, eps: float, W: Weights, budget: int | None = None, tol: float = DEFAULT_TOL):
    """True iff every grid vector has ||v||_{r,s} >= eps; MARGINAL within ``tol``."""
    if not eps > 0:
        raise PreconditionError("epsilon must be positive")
    leps = math.log(eps)
    pts = g.points_in_box(rs_box(leps + tol, W), budget)
    if len(pts) == 0:
        return True
    lmin = float(np.min(log_rs_rows(pts.points, W)))
    if lmin < leps - tol:
        return False
    if lmin <= leps + tol:
        return MARGINAL
    return True


def height(g: Grid, budget: int | None = None) -> float:
    """1 / (shortest nonzero vector in sup norm); requires a lattice (shift 0)."""
    if any(g.frame.shift_num):
        raise PreconditionError("height is defined for lattices (shift must be 0)")
    h = min(1.0, short_vector_bound(g.frame)) * (1 + 1e-9)
    for _ in range(200):
        pts = g.points_in_box(np.full(g.d, h), budget)
        nz = ~pts.is_zero
        if nz.any():
            return 1.0 / float(np.min(np.max(np.abs(pts.points[nz]), axis=1)))
        h *= 2.0
    raise BudgetError("no nonzero lattice vector found")


def _has_short_vector(g: Grid, bound: float, budget: int | None) -> bool:
    if short_vector_bound(g.frame) < bound:
        return True
    pts = g.points_in_box(np.full(g.d, bound), budget)
    nz = ~pts.is_zero
    return bool(nz.any() and np.min(np.max(np.abs(pts.points[nz]), axis=1)) < bound)


def escape_fraction(A: ExactMatrix, W: Weights, N: int, H: float, budget: int | None = None) -> float:
    """Fraction of l in 1..N with ht(a_l x_A) > H."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    if not H >= 1:
        raise PreconditionError("H must be >= 1")
    if A.shape != (W.m, W.n):
        raise DimensionError(f"A has shape {A.shape}, weights expect {(W.m, W.n)}")
    radius = max(math.exp(N) * H ** (-1.0 / float(sj)) for sj in W.s)
    A.check_horizon(radius, "orbit enumeration radius")
    x = lift_point(A)
    hits = sum(_has_short_vector(apply_flow(FlowElement(l), x, W), 1.0 / H, budget) for l in range(1, N + 1))
    return hits / N


@dataclass(frozen=True)
class OrbitSample:
    t: int
    min_value: float
    in_L: bool | str
    height: float


def orbit_scan(
    A: ExactMatrix,
    b: TargetVector | None,
    W: Weights,
    eps: float,
    T_max: int,
    budget: int | None = None,
) -> list[OrbitSample]:
    """Integer-time samples of the a_t orbit of y_{A,b}: grid minimum, L_eps flag, height of a_t x_A."""
    if T_max < 0:
        raise PreconditionError("T_max must be >= 0")
    y, x = lift_point(A, b), lift_point(A)
    out = []
    for t in range(T_max + 1):
        gy = apply_flow(FlowElement(t), y, W)
        gm = grid_min(gy, W, exclude_zero=False, budget=budget)
        A.check_horizon(math.exp(t + gm.search_log_beta * W.n / W.d), "orbit enumeration radius")
        flag = in_L_epsilon(gy, eps, W, budget)
        ht = height(apply_flow(FlowElement(t), x, W), budget)
        out.append(OrbitSample(t, gm.value.value, flag, ht))
    return out
