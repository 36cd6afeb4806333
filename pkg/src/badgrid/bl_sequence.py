"""The modified Bugeaud-Laurent index map phi over a finite best-approximation sequence.

Indices are 1-based throughout, matching the usual (y_k, Y_k, M_k) numbering.
The defining contract for consecutive phi values is

    Y_{phi(i+1)} >= R Y_{phi(i)}   and   M_{phi(i)} Y_{phi(i+1)} <= R.

At a finite horizon the asymptotic trichotomy (J finite, J cofinite, both
infinite) is decided from the scanned range; the classification used is
recorded in ``construction_path``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .best_approx import BestApproxSequence, doubling_index
from .errors import InsufficientDataError, PreconditionError
from .quasinorm import DEFAULT_TOL

PATHS = ("finite-J", "case-i", "case-ii-1", "case-ii-2")


@dataclass(frozen=True)
class PhiSubsequence:
    indices: tuple[int, ...]
    R: float
    S: float
    construction_path: str
    warnings: tuple[str, ...] = ()
    V: int | None = None


class _Seq:
    """1-based log views of Y and M."""

    def __init__(self, seq: BestApproxSequence):
        self.ly = np.concatenate([[np.nan], seq.logY])
        self.lm = np.concatenate([[np.nan], seq.logM])
        self.K = len(seq)

    def Y(self, j):
        return self.ly[j]

    def M(self, j):
        return self.lm[j]


def _greedy_down(s: _Seq, top: int, floor: int, lR: float) -> list[int]:
    """j_0 = top, j_l = max{j >= floor : Y_{j_{l-1}} >= R Y_j}; returned in increasing order."""
    chain = [top]
    while True:
        prev = chain[-1]
        cand = None
        for j in range(prev - 1, floor - 1, -1):
            if s.Y(prev) >= lR + s.Y(j) - DEFAULT_TOL:
                cand = j
                break
        if cand is None:
            break
        chain.append(cand)
    return chain[::-1]


def _psi_phi(s: _Seq, start: int, stop: int, lR: float, lS: float):
    """psi(1) = start, psi(i+1) = min{j <= stop : S Y_psi(i) <= Y_j}; phi from psi as in the cofinite case.

    Returns (psi, phi) with len(phi) = len(psi) - 1.
    """
    psi = [start]
    while True:
        nxt = None
        for j in range(psi[-1] + 1, stop + 1):
            if s.Y(j) >= lS + s.Y(psi[-1]) - DEFAULT_TOL:
                nxt = j
                break
        if nxt is None:
            break
        psi.append(nxt)
    phi = []
    for i in range(len(psi) - 1):
        if s.M(psi[i]) + s.Y(psi[i + 1]) <= lR - lS + DEFAULT_TOL:
            phi.append(psi[i])
        else:
            phi.append(psi[i + 1] - 1)
    return psi, phi


def _runs(mask: list[bool], offset: int) -> list[tuple[bool, int, int]]:
    """Maximal runs (value, first, last) of a boolean list indexed from ``offset``."""
    out = []
    i = 0
    while i < len(mask):
        j = i
        while j + 1 < len(mask) and mask[j + 1] == mask[i]:
            j += 1
        out.append((mask[i], i + offset, j + offset))
        i = j + 1
    return out


def build_phi(seq: BestApproxSequence, R: float, S: float, V: int | None = None) -> PhiSubsequence:
    if not (R > 1 and S > R):
        raise PreconditionError("need S > R > 1")
    if len(seq) < 3:
        raise InsufficientDataError("sequence too short to build phi")
    s = _Seq(seq)
    K = s.K
    lR, lS = math.log(R), math.log(S)
    if V is None:
        V = doubling_index(seq).V
    lJ = lR - 3 * lS
    # J is decidable for j = 1..K-1 (needs Y_{j+1})
    inJ = [bool(s.M(j) + s.Y(j + 1) <= lJ + DEFAULT_TOL) for j in range(1, K)]
    warnings: list[str] = []
    half = (K - 1) // 2 + 1
    tail = inJ[half - 1 :]

    def finish(idx: list[int], path: str) -> PhiSubsequence:
        if len(idx) < 2:
            raise InsufficientDataError(f"horizon too short: {path} construction produced {len(idx)} index")
        return PhiSubsequence(tuple(idx), R, S, path, tuple(warnings), V)

    if any(inJ) and all(tail):
        # J contains the whole scanned tail: cofinite case
        start = K - 1
        while start - 1 >= 1 and inJ[start - 2]:
            start -= 1
        psi, phi = _psi_phi(s, start, K, lR, lS)
        if len(phi) < 2:
            warnings.append("cofinite tail too short for the psi recursion; using greedy interpolation")
            return finish(_greedy_down(s, K, 1, lR), "finite-J")
        return finish(phi, "case-i")

    long_len = 3 * math.ceil(math.log2(S)) * V
    blocks = []
    if any(inJ):
        j0 = inJ.index(True) + 1
        for val, a, b in _runs(inJ[j0 - 1 :], j0):
            if val and b - a + 1 >= long_len:
                psi, phi = _psi_phi(s, a, b, lR, lS)
                if len(phi) >= 2:
                    blocks.append(phi)
    if len(blocks) >= 2:
        out: list[int] = []
        for k, phi_k in enumerate(blocks):
            if k + 1 < len(blocks):
                out.extend(phi_k[:-1])
                chain = _greedy_down(s, blocks[k + 1][0], phi_k[-1], lR)
                out.extend(chain[:-1])
            else:
                out.extend(phi_k)
                warnings.append(
                    "last long run has no successor within the horizon; its block is closed at phi_k(m_k)"
                )
        return finish(out, "case-ii-2")
    path = "finite-J" if not any(tail) else "case-ii-1"
    return finish(_greedy_down(s, K, 1, lR), path)


@dataclass
class PhiReport:
    mgrow_ok: bool
    violations: list = field(default_factory=list)
    worst_MY_product: float = 0.0
    density: float | None = None
    density_bound: float = 0.0
    density_ok: bool | None = None
    path: str = ""
    indices: tuple = ()

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "indices": list(self.indices),
            "mgrow_ok": self.mgrow_ok,
            "violations": self.violations,
            "worst_MY_product": self.worst_MY_product,
            "density": self.density,
            "density_bound": self.density_bound,
            "density_ok": self.density_ok,
        }


def verify_phi(seq: BestApproxSequence, phi: PhiSubsequence, slack: float = 1.5, tol: float = DEFAULT_TOL) -> PhiReport:
    """Check the growth/quality pair for every consecutive phi value (exact up to ``tol`` in logs).

    The density k / log Y_phi(k) is only advisory at a finite horizon.
    """
    s = _Seq(seq)
    idx = list(phi.indices)
    if any(not 1 <= j <= s.K for j in idx):
        raise PreconditionError("phi index outside the sequence range")
    lR = math.log(phi.R)
    viol = []
    worst = -math.inf
    for i in range(len(idx) - 1):
        a, b = idx[i], idx[i + 1]
        grow = s.Y(b) - s.Y(a)
        prod = s.M(a) + s.Y(b)
        worst = max(worst, prod)
        if b <= a or grow < lR - tol or prod > lR + tol:
            viol.append({"i": i + 1, "pair": [a, b], "log_growth": float(grow), "log_MY": float(prod)})
    bound = slack / math.log(phi.S)
    density = None
    if idx:
        lyk = s.Y(idx[-1])
        density = len(idx) / lyk if lyk > 0 else math.inf
    return PhiReport(
        mgrow_ok=not viol,
        violations=viol,
        worst_MY_product=math.exp(worst) if worst > -math.inf else 0.0,
        density=density,
        density_bound=bound,
        density_ok=None if density is None else density <= bound,
        path=phi.construction_path,
        indices=tuple(idx),
    )
