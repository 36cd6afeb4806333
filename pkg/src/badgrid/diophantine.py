"""Direct scans over integer vectors q: badness, zeta, rationality, and the orbit/scan cross-check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetError, DimensionError, PreconditionError, RationalPairError
from .grid import FlowElement, apply_flow, in_L_epsilon, lift_point
from .lattice import default_budget
from .quasinorm import DEFAULT_TOL, MARGINAL, log_quasinorm_rows
from .weights import ExactMatrix, TargetVector, Weights, _exact_ratio, to_fraction

VIOLATES = "violates-eps"
CONSISTENT = "consistent-up-to-Q_max"


def q_box(W_s: Sequence, Q: float, budget: int | None = None) -> np.ndarray:
    """All integer q with ||q||_s <= Q, as an (N, n) int64 array in lexicographic order."""
    budget = default_budget() if budget is None else int(budget)
    w = np.array([float(x) for x in W_s])
    if Q < 0:
        return np.zeros((0, len(w)), dtype=np.int64)
    half = np.floor(np.power(float(Q), w) * (1 + 1e-12)).astype(np.int64)
    counts = 2 * half + 1
    total = int(np.prod([int(c) for c in counts]))
    if total > budget:
        raise BudgetError(f"scan needs {total} vectors, budget is {budget}")
    grids = np.indices([int(c) for c in counts]).reshape(len(w), -1).T
    return grids.astype(np.int64) - half


def log_norm_rows(qs: np.ndarray, w: Sequence) -> np.ndarray:
    return log_quasinorm_rows(qs.astype(float), np.array([float(x) for x in w]))


def witness_key(q) -> tuple:
    """Deterministic preference among equally good integer vectors: short, then axis-like, then positive."""
    q = [int(x) for x in q]
    return (sum(x * x for x in q), tuple(abs(x) for x in reversed(q)), tuple(-x for x in q))


@dataclass(frozen=True)
class BadnessResult:
    min_value: float
    witness: tuple[int, ...] | None
    verdict: str
    Q_max: float
    eps: float
    q_min: float = 0.0

    def to_json(self) -> dict:
        return {
            "min_value": self.min_value,
            "witness": list(self.witness) if self.witness is not None else None,
            "verdict": self.verdict,
            "Q_max": self.Q_max,
            "q_min": self.q_min,
            "epsilon": self.eps,
        }


def _check_shapes(A: ExactMatrix, b: TargetVector | None, W: Weights):
    if A.shape != (W.m, W.n):
        raise DimensionError(f"A has shape {A.shape}, weights expect {(W.m, W.n)}")
    if b is not None and len(b) != W.m:
        raise DimensionError(f"b has length {len(b)}, expected {W.m}")


def badness_scan(
    A: ExactMatrix,
    b: TargetVector | None,
    W: Weights,
    eps: float,
    Q_max: float,
    q_min: float = 0.0,
    budget: int | None = None,
    tol: float = DEFAULT_TOL,
) -> BadnessResult:
    """min of ||q||_s <Aq - b>_r over q with q_min <= ||q||_s <= Q_max, q != 0.

    A scan can refute eps-badness but never certify it. ``q_min`` restricts the
    scan to a tail, which is what the liminf in the definition looks at.
    """
    _check_shapes(A, b, W)
    if not eps > 0:
        raise PreconditionError("epsilon must be positive")
    A.check_horizon(Q_max, "Q_max")
    qs = q_box(W.s, Q_max, budget)
    ln = log_norm_rows(qs, W.s)
    keep = ln > -math.inf
    if q_min > 0:
        keep &= ln >= math.log(q_min) - 1e-15
    qs, ln = qs[keep], ln[keep]
    if len(qs) == 0:
        return BadnessResult(math.inf, None, CONSISTENT, Q_max, eps, q_min)
    res = A.residuals(qs, b)
    lr = log_quasinorm_rows(res, W.rf)
    lp = lr + ln
    lmin = float(np.min(lp))
    near = np.flatnonzero(lp <= lmin + tol) if lmin > -math.inf else np.flatnonzero(lp == lmin)
    i = min(near.tolist(), key=lambda k: (float(ln[k]), witness_key(qs[k])))
    leps = math.log(eps)
    if lmin < leps - tol:
        verdict = VIOLATES
    elif lmin <= leps + tol:
        verdict = MARGINAL
    else:
        verdict = CONSISTENT
    value = math.exp(lmin) if lmin > -math.inf else 0.0
    return BadnessResult(value, tuple(int(x) for x in qs[i]), verdict, Q_max, eps, q_min)


def zeta(b, T: float, cap: int = 10**7, chunk: int = 1 << 16) -> int:
    """Least N with min_{1<=q<=N} ||q b||_Z <= T^2 / N (sup-norm distance to Z^d).

    Raises :class:`BudgetError` if no N up to ``cap`` qualifies.
    """
    if not T > 0:
        raise PreconditionError("T must be positive")
    coords = b.coords if isinstance(b, TargetVector) else [to_fraction(x) for x in np.atleast_1d(b)]
    den = math.lcm(*[x.denominator for x in coords])
    num = np.array([int(x * den) % den for x in coords], dtype=object)
    safe = den * cap < (1 << 62)
    if safe:
        num = num.astype(np.int64)
    T2 = float(T) ** 2
    running = math.inf
    start = 1
    while start <= cap:
        stop = min(cap, start + chunk - 1)
        q = np.arange(start, stop + 1, dtype=np.int64 if safe else object)
        r = np.mod(np.outer(q, num), den)
        dist = np.minimum(r, den - r)
        worst = dist.max(axis=1) if dist.shape[1] else np.zeros(len(q), dtype=dist.dtype)
        dfl = _exact_ratio(worst.reshape(-1, 1), den).ravel()
        runmin = np.minimum.accumulate(np.minimum(dfl, running))
        ok = np.flatnonzero(runmin * q.astype(float) <= T2)
        if len(ok):
            return int(start + ok[0])
        running = float(runmin[-1])
        start = stop + 1
    raise BudgetError(f"zeta exceeds cap {cap}")


def is_rational_pair(A: ExactMatrix, b: TargetVector | None, W: Weights, Q: float, budget: int | None = None):
    """First q != 0 with ||q||_s <= Q and Aq - b integral (exactly), or None."""
    _check_shapes(A, b, W)
    qs = q_box(W.s, Q, budget)
    qs = qs[np.any(qs != 0, axis=1)]
    if len(qs) == 0:
        return None
    num, _ = A.residual_numerators(qs, b)
    hit = np.flatnonzero(np.all(num == 0, axis=1))
    if len(hit) == 0:
        return None
    i = min(hit.tolist(), key=lambda k: witness_key(qs[k]))
    return tuple(int(x) for x in qs[i])


@dataclass
class DaniReport:
    eps: float
    times: list[int]
    orbit_in_L: list
    scan_witness: list
    inconsistencies: list = field(default_factory=list)
    marginals: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.inconsistencies

    def to_json(self) -> dict:
        return {
            "epsilon": self.eps,
            "times": self.times,
            "orbit_in_L": [f if isinstance(f, str) else bool(f) for f in self.orbit_in_L],
            "scan_witness": [list(w) if w is not None else None for w in self.scan_witness],
            "inconsistencies": self.inconsistencies,
            "marginals": self.marginals,
            "consistent": self.consistent,
        }


def dani_consistency(
    A: ExactMatrix,
    b: TargetVector | None,
    W: Weights,
    eps: float,
    T_max: int,
    Q_max: float | None = None,
    budget: int | None = None,
    tol: float = DEFAULT_TOL,
) -> DaniReport:
    """Compare the orbit test a_t y_{A,b} in L_eps with a direct scan for q satisfying

        e^t <Aq - b>_r < eps^(m/d)   and   e^-t ||q||_s < eps^(n/d)

    at every integer t in 0..T_max. The two sides use independent code paths
    (lattice enumeration versus exact residuals over a q-box).
    """
    _check_shapes(A, b, W)
    if not 0 < eps:
        raise PreconditionError("epsilon must be positive")
    if T_max < 0:
        raise PreconditionError("T_max must be >= 0")
    m, n, d = W.m, W.n, W.d
    leps = math.log(eps)
    needed = math.exp(T_max + leps * n / d)
    Q = needed if Q_max is None else float(Q_max)
    if Q < needed * (1 - 1e-12):
        raise PreconditionError(f"Q_max {Q:.6g} is below the matched scale {needed:.6g}")
    A.check_horizon(Q, "scan radius")
    qs = q_box(W.s, Q, budget)
    nonzero = np.any(qs != 0, axis=1)
    num, den = A.residual_numerators(qs, b)
    exact = np.all(num == 0, axis=1) & nonzero
    if exact.any():
        i = min(np.flatnonzero(exact).tolist(), key=lambda k: witness_key(qs[k]))
        raise RationalPairError(f"(A, b) is rational within the scan: A q - b is integral at q = {qs[i].tolist()}")
    lr = log_quasinorm_rows(_exact_ratio(num, den), W.rf)
    ln = log_norm_rows(qs, W.s)
    y = lift_point(A, b)
    report = DaniReport(eps, [], [], [])
    for t in range(T_max + 1):
        flag = in_L_epsilon(apply_flow(FlowElement(t), y, W), eps, W, budget, tol)
        with np.errstate(invalid="ignore"):
            g = np.maximum((d / m) * (t + lr), (d / n) * (ln - t)) - leps
        gmin = float(np.min(g))
        idx = np.flatnonzero(g <= gmin + tol) if gmin > -math.inf else np.flatnonzero(g == gmin)
        wit = tuple(int(x) for x in qs[min(idx.tolist(), key=lambda k: witness_key(qs[k]))])
        if gmin < -tol:
            scan = False
        elif gmin <= tol:
            scan = MARGINAL
        else:
            scan = True
        report.times.append(t)
        report.orbit_in_L.append(flag)
        report.scan_witness.append(wit if scan is not True else None)
        if flag == MARGINAL or scan == MARGINAL:
            report.marginals.append(t)
        elif flag != scan:
            kind = "failure-without-witness" if flag is False else "witness-at-L-time"
            report.inconsistencies.append({"t": t, "kind": kind, "orbit": flag, "scan_q": list(wit)})
    return report
