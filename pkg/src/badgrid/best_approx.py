"""Weighted best approximations, Dirichlet statistics and the singular-on-average detector.

A sequence of best approximations to a matrix B (shape n_t x m_s) lives on
integer vectors y in Z^{m_s}: the source quasinorm ||y|| uses the source
weights and the residual M(y) = <B y> uses the target weights. For the
transpose of A this is y in Z^m with weights r, residual weights s.

Selection rule: the next record is the y of smallest source quasinorm whose
residual is strictly below the current one; within an equal-norm shell the
smallest residual wins, then the lexicographically smallest vector with its
first nonzero coordinate positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InsufficientDataError, PreconditionError
from .lattice import Frame, box_points
from .quasinorm import DEFAULT_TOL, QuasinormValue, log_quasinorm_rows
from .weights import ExactMatrix, Weights, _exact_ratio, _lcm, to_fraction

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BestApproxRecord:
    y: tuple[int, ...]
    Y: QuasinormValue
    M: QuasinormValue


@dataclass
class BestApproxSequence:
    records: list[BestApproxRecord]
    horizon: QuasinormValue
    degenerate_hit: tuple[int, ...] | None = None
    source_weights: tuple[Fraction, ...] | None = None
    target_weights: tuple[Fraction, ...] | None = None

    def __len__(self):
        return len(self.records)

    @property
    def logY(self) -> np.ndarray:
        return np.array([r.Y.log_value for r in self.records])

    @property
    def logM(self) -> np.ndarray:
        return np.array([r.M.log_value for r in self.records])

    @classmethod
    def from_values(cls, logY: Sequence[float], logM: Sequence[float], horizon_log: float | None = None):
        """A sequence given directly by (log Y_k, log M_k); used for synthetic experiments."""
        if len(logY) != len(logM):
            raise DimensionError("logY and logM must have equal length")
        recs = [BestApproxRecord((), QuasinormValue(float(a)), QuasinormValue(float(b))) for a, b in zip(logY, logM)]
        hz = float(logY[-1]) if horizon_log is None and len(logY) else (horizon_log or 0.0)
        return cls(recs, QuasinormValue(hz))

    def log_products(self) -> np.ndarray:
        """log(M_k Y_{k+1}) for k = 1..len-1."""
        return self.logM[:-1] + self.logY[1:]

    def y_at_most(self, i: int, log_T: float, exact_pow2: int | None = None) -> bool:
        """||y_i|| <= T; exact when T = 2^l and the weights are known."""
        rec = self.records[i]
        if exact_pow2 is not None and rec.y and self.source_weights is not None:
            l = exact_pow2
            for yi, w in zip(rec.y, self.source_weights):
                # |y_i|^(1/w) <= 2^l  <=>  |y_i|^den(w) <= 2^(l num(w))
                if abs(yi) ** w.denominator > 2 ** (l * w.numerator):
                    return False
            return True
        return rec.Y.log_value <= log_T + DEFAULT_TOL

    def to_rows(self) -> list[dict]:
        rows = []
        lp = self.log_products()
        for k, rec in enumerate(self.records):
            rows.append(
                {
                    "k": k + 1,
                    "y": " ".join(str(v) for v in rec.y),
                    "Y": rec.Y.value,
                    "M": rec.M.value,
                    "MY_next": math.exp(lp[k]) if k < len(lp) else None,
                }
            )
        return rows

    def to_json(self) -> dict:
        return {
            "records": self.to_rows(),
            "horizon": self.horizon.value,
            "degenerate_hit": list(self.degenerate_hit) if self.degenerate_hit is not None else None,
        }


# exact ordering keys ------------------------------------------------------

def _exponents(w: Sequence[Fraction]) -> list[int]:
    """Integer exponents e_i with x^(1/w_i) order-equivalent to x^(e_i) across i."""
    P = _lcm(x.numerator for x in w)
    return [P * x.denominator // x.numerator for x in w]


def y_key(y: Sequence[int], w: Sequence[Fraction]) -> int:
    """Exact monotone key for ||y||_w."""
    return max(abs(int(v)) ** e for v, e in zip(y, _exponents(w)))


def residual_key(num_row, den: int, w: Sequence[Fraction]) -> Fraction:
    """Exact monotone key for max_j |num_j/den|^(1/w_j)."""
    return max(Fraction(abs(int(v)) ** e, den**e) for v, e in zip(num_row, _exponents(w)))


def canonical(y: Sequence[int]) -> tuple[int, ...]:
    y = tuple(int(v) for v in y)
    for v in y:
        if v != 0:
            return y if v > 0 else tuple(-x for x in y)
    return y


def target_distance(B: ExactMatrix, y: Sequence[int], w_target: Sequence) -> QuasinormValue:
    """M(y) = min_q ||B y - q||, attained by rounding each coordinate; exact zero gives log -inf."""
    w = [to_fraction(x) for x in w_target]
    if len(y) != B.cols:
        raise DimensionError(f"y has length {len(y)}, B has {B.cols} columns")
    if len(w) != B.rows:
        raise DimensionError(f"target weights have length {len(w)}, B has {B.rows} rows")
    res = B.residuals(np.array([list(map(int, y))], dtype=object if max(map(abs, y), default=0) > 2**62 else np.int64))
    return QuasinormValue(float(log_quasinorm_rows(res, np.array([float(x) for x in w]))[0]))


# sequence construction ----------------------------------------------------

def _search_frame(B: ExactMatrix) -> Frame:
    nt, ms = B.shape
    d = nt + ms
    basis = [[Fraction(0)] * d for _ in range(d)]
    for j in range(nt):
        basis[j][j] = Fraction(-1)
        for i in range(ms):
            basis[j][nt + i] = B.entries[j][i]
    for i in range(ms):
        basis[nt + i][nt + i] = Fraction(1)
    return Frame.from_fractions(basis)


class _Evaluator:
    def __init__(self, B: ExactMatrix, src, tgt):
        self.B = B
        self.src = src
        self.tgt = tgt
        self.wt = np.array([float(x) for x in tgt])
        self.ws = np.array([float(x) for x in src])

    def evaluate(self, ys: np.ndarray):
        num, den = self.B.residual_numerators(ys)
        lm = log_quasinorm_rows(_exact_ratio(num, den), self.wt)
        ly = log_quasinorm_rows(ys.astype(float), self.ws)
        return num, den, lm, ly


def _pick(ev: _Evaluator, ys, num, den, lm, ly, cur_key, log_cap):
    """Best candidate under the selection rule among y with M(y) < current and ||y|| <= cap."""
    ok = (lm <= cur_key[1] + 1e-9) & (ly <= log_cap + 1e-12)
    best = None
    for i in np.flatnonzero(ok).tolist():
        mk = residual_key(num[i], den, ev.tgt)
        if cur_key[0] is not None and not mk < cur_key[0]:
            continue
        y = tuple(int(v) for v in ys[i])
        key = (y_key(y, ev.src), mk, y)
        if best is None or key < best[0]:
            best = (key, i)
    return best


def best_approx_sequence(
    B: ExactMatrix,
    source_weights: Sequence,
    target_weights: Sequence,
    Y_max: float,
    method: str = "lattice",
    budget: int | None = None,
) -> BestApproxSequence:
    """Best approximations y to B with ||y|| <= Y_max.

    ``method="lattice"`` finds each next record by a certified box search in
    the lattice {(B y - q, y)}; ``method="shell"`` scans every y up to Y_max
    and is meant for cross-checks on small inputs.
    """
    src = tuple(to_fraction(x) for x in source_weights)
    tgt = tuple(to_fraction(x) for x in target_weights)
    if B.shape != (len(tgt), len(src)):
        raise DimensionError(f"B has shape {B.shape}, weights expect {(len(tgt), len(src))}")
    if not Y_max >= 1:
        raise PreconditionError("Y_max must be >= 1")
    B.check_horizon(Y_max, "Y_max")
    if method == "shell":
        return _shell_sequence(B, src, tgt, Y_max, budget)
    if method != "lattice":
        raise PreconditionError(f"unknown method {method!r}")
    ev = _Evaluator(B, src, tgt)
    frame = _search_frame(B)
    nt, ms = B.shape
    log_cap = math.log(Y_max)
    records: list[BestApproxRecord] = []
    cur = (None, math.inf)  # exact residual key, log residual
    degenerate = None
    log_g = 0.0
    while True:
        zb = np.full(nt, 0.5) if cur[0] is None else np.exp(cur[1] * ev.wt) * (1 + 1e-9)
        yb = np.exp(min(log_g, log_cap) * ev.ws)
        pts = box_points(frame, np.concatenate([zb, yb]), budget)
        ys = pts.coeffs[:, nt:]
        ys = ys[np.any(ys != 0, axis=1)]
        found = None
        if len(ys):
            ys = np.array(sorted({canonical(y) for y in ys.tolist()}), dtype=ys.dtype)
            num, den, lm, ly = ev.evaluate(ys)
            found = _pick(ev, ys, num, den, lm, ly, cur, min(log_g, log_cap))
        if found is None:
            if log_g >= log_cap:
                break
            log_g = min(log_g + math.log(4.0), log_cap)
            continue
        (_, mk, y), i = found
        if mk == 0:
            degenerate = y
            break
        records.append(BestApproxRecord(y, QuasinormValue(float(ly[i])), QuasinormValue(float(lm[i]))))
        cur = (mk, float(lm[i]))
        log_g = float(ly[i]) + LOG2
    horizon = QuasinormValue(log_cap)
    if degenerate is not None:
        horizon = QuasinormValue(float(log_quasinorm_rows(np.array([degenerate], dtype=float), ev.ws)[0]))
    return BestApproxSequence(records, horizon, degenerate, src, tgt)


def _shell_sequence(B, src, tgt, Y_max, budget) -> BestApproxSequence:
    from .diophantine import q_box

    ev = _Evaluator(B, src, tgt)
    ys = q_box(src, Y_max, budget)
    first = np.argmax(ys != 0, axis=1)
    lead = ys[np.arange(len(ys)), first]
    ys = ys[lead > 0]
    num, den, lm, ly = ev.evaluate(ys)
    keys = [y_key(y, src) for y in ys.tolist()]
    order = sorted(range(len(ys)), key=lambda i: (keys[i], float(lm[i]), tuple(ys[i].tolist())))
    records = []
    cur_lm = math.inf
    degenerate = None
    pos = 0
    while pos < len(order):
        end = pos
        while end < len(order) and keys[order[end]] == keys[order[pos]]:
            end += 1
        i = order[pos]  # smallest residual in this shell (then lexicographic)
        if float(lm[i]) < cur_lm:
            if lm[i] == -math.inf:
                degenerate = tuple(int(v) for v in ys[i])
                break
            records.append(BestApproxRecord(tuple(int(v) for v in ys[i]), QuasinormValue(float(ly[i])), QuasinormValue(float(lm[i]))))
            cur_lm = float(lm[i])
        pos = end
    horizon = QuasinormValue(math.log(Y_max))
    return BestApproxSequence(records, horizon, degenerate, src, tgt)


def sequence_for(A: ExactMatrix, W: Weights, Y_max: float, orientation: str = "tA", **kw) -> BestApproxSequence:
    """Best approximations to tA (y in Z^m, weights r then s) or to A (roles swapped)."""
    if A.shape != (W.m, W.n):
        raise DimensionError(f"A has shape {A.shape}, weights expect {(W.m, W.n)}")
    if orientation == "tA":
        return best_approx_sequence(A.transpose(), W.r, W.s, Y_max, **kw)
    if orientation == "A":
        return best_approx_sequence(A, W.s, W.r, Y_max, **kw)
    raise PreconditionError(f"unknown orientation {orientation!r}")


# statistics -----------------------------------------------------------------

@dataclass(frozen=True)
class DoublingReport:
    V: int
    c: float
    gamma: float


def doubling_index(seq: BestApproxSequence, tol: float = DEFAULT_TOL) -> DoublingReport:
    """Smallest V with Y_{i+V} >= 2 Y_i throughout, and constants with Y_i >= c gamma^i."""
    if len(seq) < 2:
        raise InsufficientDataError("doubling index needs at least two records")
    ly = seq.logY
    K = len(ly)
    V = K
    for v in range(1, K):
        if np.all(ly[v:] - ly[:-v] >= LOG2 - tol):
            V = v
            break
    gamma = 2.0 ** (1.0 / V)
    idx = np.arange(1, K + 1)
    c = float(np.exp(np.min(ly - idx * math.log(gamma))))
    return DoublingReport(V, c, gamma)


def dirichlet_check(seq: BestApproxSequence, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """M_k Y_{k+1} <= 1 for all consecutive records; returns (ok, worst product)."""
    if len(seq) < 2:
        raise InsufficientDataError("Dirichlet check needs at least two records")
    lp = seq.log_products()
    worst = float(np.max(lp))
    return bool(worst <= tol), math.exp(worst)


def no_solution_scales(seq: BestApproxSequence, eps: float, N: int) -> list[int]:
    """The l in 1..N for which no y satisfies 0 < ||y|| <= 2^l and M(y) <= eps 2^-l.

    Decided from the records alone: with Y_k <= 2^l < Y_{k+1}, the system is
    unsolvable exactly when log2 eps - log2 M_k < l.
    """
    if not 0 < eps < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    if len(seq) == 0:
        raise InsufficientDataError("empty sequence")
    if N * LOG2 > seq.horizon.log_value + DEFAULT_TOL:
        raise InsufficientDataError(f"2^{N} exceeds the explored horizon {seq.horizon.value:.6g}")
    le2 = math.log2(eps)
    out = []
    for l in range(1, N + 1):
        k = -1
        for i in range(len(seq)):
            if seq.y_at_most(i, l * LOG2, exact_pow2=l):
                k = i
            else:
                break
        if k < 0:
            out.append(l)
            continue
        lm2 = seq.records[k].M.log_value / LOG2
        if le2 - lm2 < l:
            out.append(l)
    return out


def soa_statistic(seq: BestApproxSequence, eps: float, k: int, base: float = math.e, tol: float = DEFAULT_TOL) -> float:
    """|{i <= k : M_i Y_{i+1} > eps}| / log Y_k  (k is 1-based, k <= len - 1)."""
    if not 1 <= k <= len(seq) - 1:
        raise InsufficientDataError(f"k must lie in 1..{len(seq) - 1}")
    ly = seq.records[k - 1].Y.log_value
    if ly <= 0:
        raise InsufficientDataError("log Y_k must be positive")
    lp = seq.log_products()[:k]
    count = int(np.sum(lp > math.log(eps) + tol))
    return count / (ly / math.log(base))


def soa_trajectory(seq: BestApproxSequence, eps: float, base: float = math.e) -> list[tuple[int, float]]:
    return [
        (k, soa_statistic(seq, eps, k, base))
        for k in range(1, len(seq))
        if seq.records[k - 1].Y.log_value > 0
    ]


COMPATIBLE = "singular-on-average-compatible at horizon"
NOT_COMPATIBLE = "not-compatible at horizon"
DEGENERATE = "rational-degenerate"
INSUFFICIENT = "insufficient-data"


@dataclass
class SoaReport:
    verdict: str
    orientations: dict = field(default_factory=dict)
    anomaly: bool = False
    threshold: float = 0.0
    eps_grid: tuple = ()
    Y_max: float = 0.0

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "anomaly": self.anomaly,
            "threshold": self.threshold,
            "eps_grid": list(self.eps_grid),
            "Y_max": self.Y_max,
            "orientations": self.orientations,
        }


def _orientation_report(seq: BestApproxSequence, eps_grid, threshold) -> dict:
    rep = {"records": len(seq), "degenerate_hit": list(seq.degenerate_hit) if seq.degenerate_hit else None}
    if seq.degenerate_hit is not None:
        rep["verdict"] = DEGENERATE
        return rep
    traj = {}
    finals = {}
    for eps in eps_grid:
        t = soa_trajectory(seq, eps)
        t2 = soa_trajectory(seq, eps, base=2.0)
        traj[str(eps)] = [{"k": k, "stat": s, "stat_log2": s2} for (k, s), (_, s2) in zip(t, t2)]
        finals[str(eps)] = t[-1][1] if t else None
    rep["trajectories"] = traj
    rep["final"] = finals
    if any(v is None for v in finals.values()):
        rep["verdict"] = INSUFFICIENT
    else:
        rep["verdict"] = COMPATIBLE if all(v < threshold for v in finals.values()) else NOT_COMPATIBLE
    return rep


def soa_verdict(
    A: ExactMatrix,
    W: Weights,
    Y_max: float,
    eps_grid: Iterable[float],
    threshold: float = 0.5,
    budget: int | None = None,
) -> SoaReport:
    """Singular-on-average detector run on tA and, independently, on A with roles swapped."""
    eps_grid = tuple(float(e) for e in eps_grid)
    if not eps_grid:
        raise PreconditionError("eps_grid is empty")
    reps = {}
    for orient in ("tA", "A"):
        seq = sequence_for(A, W, Y_max, orient, budget=budget)
        reps[orient] = _orientation_report(seq, eps_grid, threshold)
    verdicts = {r["verdict"] for r in reps.values()}
    if DEGENERATE in verdicts:
        verdict, anomaly = DEGENERATE, len(verdicts) > 1
    elif len(verdicts) == 1:
        verdict, anomaly = verdicts.pop(), False
    else:
        verdict, anomaly = "orientation-disagreement", True
    return SoaReport(verdict, reps, anomaly, threshold, eps_grid, Y_max)
