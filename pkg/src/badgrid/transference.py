"""Pseudo-compound parallelepipeds, dual lattices and weighted transference.

Lattices here carry exact rational bases so membership and duality are
decided exactly. Only the final bound comparisons for the transferred
solution go through the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .diophantine import q_box, witness_key
from .errors import DimensionError, PreconditionError
from .lattice import Frame, _inverse_fraction, box_points
from .quasinorm import DEFAULT_TOL, idist, log_quasinorm_rows, weighted_quasinorm
from .weights import ExactMatrix, Weights, to_fraction


def transfer_constant(d: int) -> float:
    """c = d^(1/(2(d-1)))."""
    if d < 2:
        raise DimensionError("transference needs d >= 2")
    return math.exp(math.log(d) / (2 * (d - 1)))


@dataclass(frozen=True)
class Parallelepiped:
    """The box {z : |z_i| <= lambda_i}."""

    lam: tuple

    def __post_init__(self):
        if len(self.lam) == 0:
            raise DimensionError("parallelepiped needs at least one axis")
        if not all(x > 0 for x in self.lam):
            raise PreconditionError("all semi-axes must be positive")

    @property
    def d(self) -> int:
        return len(self.lam)

    def scaled(self, c) -> "Parallelepiped":
        return Parallelepiped(tuple(c * x for x in self.lam))

    def floats(self) -> np.ndarray:
        return np.array([float(x) for x in self.lam])

    def contains(self, z: Sequence) -> bool:
        """Exact when both the point and the semi-axes are rational."""
        return all(abs(to_fraction(zi)) <= to_fraction(li) for zi, li in zip(z, self.lam))


def pseudo_compound(P: Parallelepiped) -> Parallelepiped:
    """lambda*_i = (prod_j lambda_j) / lambda_i."""
    lam = P.lam
    if all(isinstance(x, (int, Fraction)) for x in lam):
        lam = tuple(Fraction(x) for x in lam)
    prod = math.prod(lam)
    return Parallelepiped(tuple(prod / x for x in lam))


@dataclass(frozen=True)
class IntegerLattice:
    """The lattice spanned by the columns of an exact rational basis with determinant +-1."""

    basis: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(to_fraction(x) for x in row) for row in self.basis)
        if any(len(row) != len(rows) for row in rows):
            raise DimensionError("basis must be square")
        object.__setattr__(self, "basis", rows)
        det = Frame.from_fractions(rows).det_exact()
        if abs(det) != 1:
            raise PreconditionError(f"basis must be unimodular (det = {det})")

    @classmethod
    def standard(cls, d: int) -> "IntegerLattice":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)))

    @property
    def d(self) -> int:
        return len(self.basis)

    def frame(self) -> Frame:
        return Frame.from_fractions(self.basis)

    def point(self, k: Sequence[int]) -> tuple[Fraction, ...]:
        return tuple(sum((b * int(x) for b, x in zip(row, k)), Fraction(0)) for row in self.basis)


def dual_lattice(L: IntegerLattice) -> IntegerLattice:
    """Basis of {x : x.y in Z for all y in L}: the exact inverse transpose."""
    den = math.lcm(*[x.denominator for row in L.basis for x in row])
    inv = _inverse_fraction([[int(x * den) for x in row] for row in L.basis])
    # (den B)^{-1} = B^{-1} / den
    d = L.d
    return IntegerLattice(tuple(tuple(inv[j][i] * den for j in range(d)) for i in range(d)))


def lift_lattice(A: ExactMatrix) -> IntegerLattice:
    """(I_m A; 0 I_n)."""
    m, n = A.shape
    d = m + n
    rows = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for i in range(m):
        for j in range(n):
            rows[i][m + j] = A.entries[i][j]
    return IntegerLattice(tuple(tuple(r) for r in rows))


def _sign_canonical(z: tuple) -> tuple:
    for x in z:
        if x != 0:
            return z if x > 0 else tuple(-v for v in z)
    return z


def _point_key(z: tuple, coeffs: tuple, lam: Sequence) -> tuple:
    scaled = max(abs(float(x)) / float(l) for x, l in zip(z, lam))
    return (scaled, sum(float(x) ** 2 for x in z), tuple(abs(c) for c in reversed(coeffs)), tuple(-c for c in coeffs))


def nonzero_points_in(P: Parallelepiped, L: IntegerLattice, budget: int | None = None) -> list[tuple]:
    """Every nonzero lattice point of P as (exact point, coefficient vector), sign-canonical, best first."""
    if P.d != L.d:
        raise DimensionError(f"parallelepiped has dimension {P.d}, lattice {L.d}")
    pts = box_points(L.frame(), P.floats(), budget)
    out = {}
    for k in pts.coeffs[~pts.is_zero]:
        kk = tuple(int(x) for x in k)
        z = L.point(kk)
        if not P.contains(z):
            continue
        if _sign_canonical(z) != z:
            z, kk = tuple(-x for x in z), tuple(-x for x in kk)
        out[z] = kk
    return sorted(out.items(), key=lambda zk: _point_key(zk[0], zk[1], P.lam))


def lattice_point_in(P: Parallelepiped, L: IntegerLattice, budget: int | None = None):
    """A nonzero point of L in P, or None when the enumeration certifies there is none.

    Preference: smallest scaled sup norm, then Euclidean length, then the
    earliest axis, with the first nonzero coordinate positive.
    """
    found = nonzero_points_in(P, L, budget)
    return found[0][0] if found else None


@dataclass
class TransferCheck:
    c: float
    hypothesis: bool
    conclusion: bool | None
    dual_witness: tuple | None
    primal_witness: tuple | None

    @property
    def holds(self) -> bool:
        return (not self.hypothesis) or bool(self.conclusion)

    def to_json(self) -> dict:
        fmt = lambda z: None if z is None else [str(x) for x in z]
        return {
            "c": self.c,
            "hypothesis": self.hypothesis,
            "conclusion": self.conclusion,
            "dual_witness": fmt(self.dual_witness),
            "primal_witness": fmt(self.primal_witness),
        }


def minkowski_transfer_check(P: Parallelepiped, L: IntegerLattice, budget: int | None = None) -> TransferCheck:
    """Test P* cap L* != {0} and, when it holds, c P cap L != {0}, both by enumeration."""
    c = transfer_constant(L.d)
    w_dual = lattice_point_in(pseudo_compound(P), dual_lattice(L), budget)
    if w_dual is None:
        return TransferCheck(c, False, None, None, None)
    w = lattice_point_in(P.scaled(c), L, budget)
    return TransferCheck(c, True, w is not None, w_dual, w)


@dataclass
class TransferResult:
    """Outcome of the weighted transference for one (A, eps, T).

    Bounds are stored as logs: ``log_lhs <= log_rhs + tol`` is the check.
    """

    q: tuple[int, ...]
    y: tuple[int, ...] | None
    T: float
    T1: float
    eps: float
    delta: float
    Z: float
    c: float
    containment_ok: bool
    large_enough: bool
    bounds: dict = field(default_factory=dict)
    success: bool = False

    def to_json(self) -> dict:
        return {
            "q": list(self.q),
            "y": list(self.y) if self.y is not None else None,
            "T": self.T,
            "T1": self.T1,
            "epsilon": self.eps,
            "delta": self.delta,
            "Z": self.Z,
            "c": self.c,
            "containment_ok": self.containment_ok,
            "large_enough": self.large_enough,
            "bounds": self.bounds,
            "success": self.success,
        }


def solve_homogeneous(A: ExactMatrix, W: Weights, eps: float, T: float, budget: int | None = None, tol: float = DEFAULT_TOL):
    """A nonzero q with <Aq>_r <= eps/T and ||q||_s <= T, or None."""
    qs = q_box(W.s, T, budget)
    qs = qs[np.any(qs != 0, axis=1)]
    if len(qs) == 0:
        return None
    lr = log_quasinorm_rows(A.residuals(qs), W.rf)
    ok = np.flatnonzero(lr <= math.log(eps) - math.log(T) + tol)
    if len(ok) == 0:
        return None
    i = min(ok.tolist(), key=lambda k: (float(lr[k]), witness_key(qs[k])))
    return tuple(int(x) for x in qs[i])


def transfer_solution(
    A: ExactMatrix,
    W: Weights,
    eps: float,
    T: float,
    budget: int | None = None,
    tol: float = 1e-9,
) -> TransferResult:
    """Transfer a solution q of the system for A into a solution y for tA.

    The hypothesis is confirmed by enumeration first. Whether T is large
    enough is reported per instance: the transferred y is nonzero whenever
    c delta^s_j Z^-s_j < 1 for every j, since then no nonzero integer vector
    fits in the second block of c P.
    """
    if A.shape != (W.m, W.n):
        raise DimensionError(f"A has shape {A.shape}, weights expect {(W.m, W.n)}")
    if not 0 < eps < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    if not T >= 1:
        raise PreconditionError("T must be >= 1")
    m, n, d = W.m, W.n, W.d
    r, s = W.rf, W.sf
    r1, rm, sn = float(r[0]), float(r[-1]), float(s[-1])
    c = transfer_constant(d)
    lc, le, lT = math.log(c), math.log(eps), math.log(T)
    expo = sn + r1 * (1 - sn)
    l_delta = le * rm * sn / expo
    l_Z = -le * rm * (1 - sn) / expo + lT
    l_T1 = lc / rm + l_Z
    A.check_horizon(max(T, math.exp(l_T1)), "transference radius")

    q = solve_homogeneous(A, W, eps, T, budget)
    if q is None:
        raise PreconditionError(f"no nonzero q with <Aq>_r <= eps/T and ||q||_s <= T (T = {T:g})")

    lQ = np.concatenate([r * (le - lT), s * lT])
    lP = np.concatenate([r * l_Z, s * (l_delta - l_Z)])
    lPstar = np.sum(lP) - lP
    containment_ok = bool(np.all(lQ <= lPstar + tol))
    large_enough = bool(np.all(lc + s * (l_delta - l_Z) < 0))

    P = Parallelepiped(tuple(np.exp(lP)))
    primal = lift_lattice(A)
    dual = dual_lattice(primal)
    check = minkowski_transfer_check(P, dual, budget)
    y = None
    if check.hypothesis:
        for z, _ in nonzero_points_in(P.scaled(c), dual, budget):
            if any(z[:m]):
                y = tuple(int(x) for x in z[:m])
                break

    res = TransferResult(q, y, float(T), math.exp(l_T1), float(eps), math.exp(l_delta), math.exp(l_Z), c,
                         containment_ok, large_enough)
    if y is not None:
        ly = weighted_quasinorm(y, W.r).log_value
        tA = A.transpose()
        tAy = [sum((row[i] * y[i] for i in range(m)), Fraction(0)) for row in tA.entries]
        lq = idist(tAy, W.s).log_value
        rhs_q = (1 / rm + 1 / sn) * lc + l_delta - l_T1
        res.bounds = {
            "quality": {"log_lhs": lq, "log_rhs": rhs_q, "ok": bool(lq <= rhs_q + tol)},
            "size": {"log_lhs": ly, "log_rhs": l_T1, "ok": bool(ly <= l_T1 + tol)},
        }
        res.success = all(b["ok"] for b in res.bounds.values())
    return res
