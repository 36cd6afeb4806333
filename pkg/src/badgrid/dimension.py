"""Box-counting estimates for sets of badly approximable targets and matrices.

Every slope reported here is a finite-scale Minkowski estimate over the
supplied resolutions, never a Hausdorff dimension. Box survival is decided
at the box center (optionally also at the corners), so survivor sets are
outer approximations at the given scan bound.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .best_approx import BestApproxSequence
from .bl_sequence import PhiSubsequence, verify_phi
from .diophantine import log_norm_rows, q_box
from .errors import BudgetError, DimensionError, PreconditionError, ScopeError
from .lattice import default_budget
from .quasinorm import DEFAULT_TOL
from .weights import ExactMatrix, TargetVector, Weights, to_fraction

LABEL = "finite-scale Minkowski estimate"


@dataclass
class BoxCountReport:
    deltas: list[float]
    counts: list[int]
    fitted_slope: float
    local_slopes: list[float | None]
    Q_max: float | None = None
    eps: float | None = None
    label: str = LABEL
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "deltas": self.deltas,
            "counts": self.counts,
            "fitted_slope": self.fitted_slope,
            "local_slopes": self.local_slopes,
            "Q_max": self.Q_max,
            "epsilon": self.eps,
            "params": self.params,
        }

    def rows(self) -> list[tuple[float, int, float | None]]:
        """(delta, count, local_slope); the local slope joins a level to the previous one."""
        return list(zip(self.deltas, self.counts, self.local_slopes))


def _check_levels(delta_levels: Sequence[float]) -> list[float]:
    deltas = [float(x) for x in delta_levels]
    if len(deltas) < 2:
        raise PreconditionError("need at least two delta levels")
    if any(not 0 < x < 1 for x in deltas):
        raise PreconditionError("delta levels must lie in (0, 1)")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise PreconditionError("delta levels must be strictly decreasing")
    return deltas


def fit_slope(deltas: Sequence[float], counts: Sequence[int]) -> tuple[float, list[float | None]]:
    """Least-squares slope of log N against log(1/delta), plus consecutive local slopes."""
    x = -np.log(np.asarray(deltas, dtype=float))
    with np.errstate(divide="ignore"):
        y = np.log(np.asarray(counts, dtype=float))
    local: list[float | None] = [None]
    for i in range(1, len(x)):
        ok = np.isfinite(y[i]) and np.isfinite(y[i - 1])
        local.append(float((y[i] - y[i - 1]) / (x[i] - x[i - 1])) if ok else None)
    good = np.isfinite(y)
    if good.sum() < 2:
        return 0.0, local
    slope = float(np.polyfit(x[good], y[good], 1)[0])
    return slope, local


def _report(deltas, counts, Q_max, eps, params) -> BoxCountReport:
    slope, local = fit_slope(deltas, counts)
    return BoxCountReport(list(deltas), [int(c) for c in counts], slope, local, Q_max, eps, LABEL, params)


def _centers(k: int, dim: int, offset: float = 0.5) -> np.ndarray:
    """Test points of the k^dim boxes of side 1/k tiling [0, 1)^dim, in lexicographic order.

    ``offset`` is the position inside each box as a fraction of its side;
    0.5 gives the centers.
    """
    axis = (np.arange(k) + offset) / k
    return np.array(list(itertools.product(axis, repeat=dim)), dtype=float).reshape(-1, dim)


def _corners(k: int, dim: int) -> np.ndarray:
    offs = np.array(list(itertools.product((-0.5, 0.5), repeat=dim)), dtype=float) / k
    return offs


def _chunks(n: int, size: int):
    for a in range(0, n, size):
        yield a, min(n, a + size)


def _box_count(min_log_fn, centers_at, deltas, eps, jobs, corners, dim, tol):
    """Counts per level; returns the counts and the per-level minimum log products."""
    leps = math.log(eps)
    counts, mins = [], []
    for dl in deltas:
        k = int(math.ceil(1.0 / dl - 1e-9))
        C = centers_at(k)
        pts = [C]
        if corners:
            pts += [C + off for off in _corners(k, dim)]
        best = np.full(len(C), -np.inf)
        # a box survives if any tested point of it survives
        for P in pts:
            parts = list(_chunks(len(P), 256))
            if jobs and jobs > 1:
                with ThreadPoolExecutor(max_workers=jobs) as ex:
                    vals = list(ex.map(lambda ab: min_log_fn(P[ab[0]:ab[1]]), parts))
            else:
                vals = [min_log_fn(P[a:b]) for a, b in parts]
            best = np.maximum(best, np.concatenate(vals) if vals else np.zeros(0))
        counts.append(int(np.sum(best >= leps - tol)))
        mins.append(best)
    return counts, mins


def bad_A_survivors(
    A: ExactMatrix,
    W: Weights,
    eps: float,
    delta: float,
    Q_max: float,
    budget: int | None = None,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """Boolean survivor mask over the box centers at resolution delta (lexicographic order)."""
    _, mins = _bad_A(A, W, eps, [delta], Q_max, budget, 1, False, tol)
    return mins[0] >= math.log(eps) - tol


def _residual_table(A: ExactMatrix, W: Weights, Q_max: float, q_min: float = 0.0, budget: int | None = None):
    """(qs, log ||q||_s, Aq minus nearest integer) for 0 < ||q||_s <= Q_max, ||q||_s >= q_min."""
    if A.shape != (W.m, W.n):
        raise DimensionError(f"A has shape {A.shape}, weights expect {(W.m, W.n)}")
    A.check_horizon(Q_max, "Q_max")
    qs = q_box(W.s, Q_max, budget)
    qs = qs[np.any(qs != 0, axis=1)]
    ln = log_norm_rows(qs, W.s)
    if q_min > 0:
        keep = ln >= math.log(q_min)
        qs, ln = qs[keep], ln[keep]
    return qs, ln, A.residuals(qs)


def _target_min_log(res: np.ndarray, ln: np.ndarray, r: np.ndarray, B: np.ndarray):
    """For each target row b: min over q of log(||q||_s <Aq - b>_r) and the index attaining it."""
    if len(ln) == 0:
        return np.full(len(B), np.inf), np.full(len(B), -1)
    D = res[None, :, :] - B[:, None, :]
    D -= np.rint(D)
    with np.errstate(divide="ignore"):
        lp = np.max(np.log(np.abs(D)) / r, axis=2) + ln[None, :]
    return np.min(lp, axis=1), np.argmin(lp, axis=1)


def _bad_A(A, W, eps, deltas, Q_max, budget, jobs, corners, tol, offset=0.5):
    if not eps > 0:
        raise PreconditionError("epsilon must be positive")
    budget = default_budget() if budget is None else int(budget)
    qs, ln, res = _residual_table(A, W, Q_max, 0.0, budget)
    m = W.m
    kmax = int(math.ceil(1.0 / deltas[-1] - 1e-9))
    if len(qs) * kmax**m * (2**m if corners else 1) > 50 * budget:
        raise BudgetError(f"box sweep needs about {len(qs) * kmax**m} residual evaluations")
    r = W.rf

    def min_log(B: np.ndarray) -> np.ndarray:
        return _target_min_log(res, ln, r, B)[0]

    counts, mins = _box_count(min_log, lambda k: _centers(k, m, offset), deltas, eps, jobs, corners, m, tol)
    return counts, mins


def bad_A_boxcount(
    A: ExactMatrix,
    W: Weights,
    eps: float,
    delta_levels: Sequence[float],
    Q_max: float,
    budget: int | None = None,
    jobs: int = 1,
    corners: bool = False,
    tol: float = DEFAULT_TOL,
    offset: float = 0.5,
) -> BoxCountReport:
    """Count delta-boxes of [0,1)^m whose center b has no q with 0 < ||q||_s <= Q_max and
    ||q||_s <Aq - b>_r < eps.
    """
    if not 0 <= offset < 1:
        raise PreconditionError("offset must lie in [0, 1)")
    deltas = _check_levels(delta_levels)
    counts, _ = _bad_A(A, W, eps, deltas, Q_max, budget, jobs, corners, tol, offset)
    return _report(deltas, counts, Q_max, eps, {"set": "Bad_A", "corners": corners, "offset": offset})


def bad_b_boxcount(
    b: TargetVector,
    W: Weights,
    eps: float,
    delta_levels: Sequence[float],
    Q_max: float,
    budget: int | None = None,
    jobs: int = 1,
    corners: bool = False,
    tol: float = DEFAULT_TOL,
    offset: float = 0.5,
) -> BoxCountReport:
    """Count delta-boxes of [0,1)^{mn} whose center A survives the scan for the fixed target b.

    Only the unweighted case is supported. Box centers are rational, so for
    b = 0 a center with denominator up to Q_max always fails; a non-dyadic
    ``offset`` avoids that artefact.
    """
    if not 0 <= offset < 1:
        raise PreconditionError("offset must lie in [0, 1)")
    if not W.is_unweighted:
        raise ScopeError("bad_b_boxcount supports unweighted weights only")
    if len(b) != W.m:
        raise DimensionError(f"b has length {len(b)}, expected {W.m}")
    if not eps > 0:
        raise PreconditionError("epsilon must be positive")
    deltas = _check_levels(delta_levels)
    budget = default_budget() if budget is None else int(budget)
    m, n = W.m, W.n
    qs = q_box(W.s, Q_max, budget).astype(float)
    qs = qs[np.any(qs != 0, axis=1)]
    ln = log_norm_rows(qs, W.s)
    bf = b.as_float()
    kmax = int(math.ceil(1.0 / deltas[-1] - 1e-9))
    if len(qs) * kmax ** (m * n) > 50 * budget:
        raise BudgetError(f"box sweep needs about {len(qs) * kmax ** (m * n)} residual evaluations")

    def min_log(U: np.ndarray) -> np.ndarray:
        Ms = U.reshape(-1, m, n)
        D = np.einsum("kij,qj->kqi", Ms, qs) - bf[None, None, :]
        D -= np.rint(D)
        with np.errstate(divide="ignore"):
            lr = np.max(np.log(np.abs(D)), axis=2) * m
        return np.min(lr + ln[None, :], axis=1) if len(qs) else np.full(len(U), np.inf)

    counts, _ = _box_count(min_log, lambda k: _centers(k, m * n, offset), deltas, eps, jobs, corners, m * n, tol)
    return _report(deltas, counts, Q_max, eps, {"set": "Bad^b", "corners": corners, "offset": offset})


SELECTORS = ("r", "rs", "standard")


def _selector_weights(selector: str, W: Weights | None, dim: int) -> np.ndarray:
    if selector == "standard":
        return np.ones(dim)
    if W is None:
        raise PreconditionError(f"selector {selector!r} needs weights")
    if selector == "r":
        if dim != W.m:
            raise DimensionError(f"d_r points must have {W.m} coordinates")
        return W.rf
    if selector == "rs":
        if dim != W.m * W.n:
            raise DimensionError(f"d_(r x s) points must have {W.m * W.n} coordinates")
        return (W.rf[:, None] + W.sf[None, :]).ravel()
    raise PreconditionError(f"unknown selector {selector!r}; choose from {SELECTORS}")


def separated_count(points: np.ndarray, w: np.ndarray, delta: float) -> int:
    """Size of a greedy maximal delta-separated subset under max_k |x_k - y_k|^(1/w_k).

    Two points are closer than delta iff |x_k - y_k| < delta^w_k for every k.
    After rescaling each axis by delta^w_k the threshold is 1, a unit hash
    cell holds at most one kept point, and only adjacent cells need checking.
    """
    u = points / np.power(delta, w)
    keys = [tuple(k) for k in np.floor(u).astype(np.int64).tolist()]
    rows = u.tolist()
    offsets = list(itertools.product((-1, 0, 1), repeat=points.shape[1]))
    kept: dict[tuple, list[float]] = {}
    for key, p in zip(keys, rows):
        if key in kept:
            continue
        close = False
        for off in offsets:
            q = kept.get(tuple(a + b for a, b in zip(key, off)))
            if q is not None and all(abs(x - y) < 1.0 for x, y in zip(p, q)):
                close = True
                break
        if not close:
            kept[key] = p
    return len(kept)


def weighted_boxcount(
    points,
    selector: str,
    delta_levels: Sequence[float],
    W: Weights | None = None,
) -> BoxCountReport:
    """Greedy separated-set counts N_delta under d_r, d_(r x s) or the sup metric.

    For d_(r x s) each point is a flattened m x n matrix and entry (i, j)
    carries weight r_i + s_j.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise PreconditionError("points must be a nonempty (N, dim) array")
    deltas = _check_levels(delta_levels)
    w = _selector_weights(selector, W, P.shape[1])
    counts = [separated_count(P, w, dl) for dl in deltas]
    return _report(deltas, counts, None, None, {"selector": selector, "n_points": len(P)})


def bad_alpha_membership(theta, ys: Sequence[Sequence[int]], alpha: float) -> bool:
    """True iff |theta . y|_Z >= alpha for every listed y (exact for rational theta)."""
    if not 0 < alpha < 0.5:
        raise PreconditionError("alpha must lie in (0, 1/2)")
    th = [to_fraction(x) for x in theta]
    a = to_fraction(alpha)
    for y in ys:
        if len(y) != len(th):
            raise DimensionError("theta and y lengths differ")
        v = sum((t * int(k) for t, k in zip(th, y)), Fraction(0))
        if abs(v - round(v)) < a:
            return False
    return True


def sample_bad_alpha(ys: Sequence[Sequence[int]], alpha: float, rng: np.random.Generator, tries: int = 100):
    """One exact rational theta in [0, 1) with |theta y_i|_Z >= alpha for every y_i (m = 1 only).

    Nested intervals: each y cuts the current interval into the pieces where
    theta y lies in [alpha, 1 - alpha] mod 1, and one piece is picked with
    probability proportional to its length. Returns None if every try dies.
    """
    a_fr = to_fraction(alpha)
    for _ in range(tries):
        lo, hi = Fraction(0), Fraction(1)
        alive = True
        for y in ys:
            k = abs(int(y[0]))
            if k == 0:
                alive = False
                break
            jlo, jhi = math.floor(lo * k), math.floor(hi * k)
            if jhi - jlo > 64:
                # many whole pieces: pick one of the interior ones uniformly
                j = jlo + 1 + math.floor(Fraction(float(rng.random())) * (jhi - jlo - 1))
                lo, hi = (j + a_fr) / k, (j + 1 - a_fr) / k
                continue
            pieces = []
            for j in range(jlo - 1, jhi + 2):
                a, b = max(lo, (j + a_fr) / k), min(hi, (j + 1 - a_fr) / k)
                if a <= b:
                    pieces.append((a, b))
            if not pieces:
                alive = False
                break
            w = np.array([float(b - a) for a, b in pieces])
            pick = int(rng.choice(len(pieces), p=w / w.sum())) if w.sum() > 0 else int(rng.integers(len(pieces)))
            lo, hi = pieces[pick]
        if alive:
            return (lo + (hi - lo) * Fraction(float(rng.random())),)
    return None


@dataclass
class InclusionReport:
    eps: float
    alpha: float
    q_range: tuple[float, float]
    tested: int
    excluded: int
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "epsilon": self.eps,
            "alpha": self.alpha,
            "q_range": list(self.q_range),
            "tested": self.tested,
            "excluded": self.excluded,
            "violations": self.violations,
        }


def inclusion_epsilon(W: Weights, R: float, alpha: float) -> float:
    """eps = (1/R) (alpha^2 / 4mn)^(1/delta), delta = min of all weights."""
    return (alpha**2 / (4 * W.m * W.n)) ** (1.0 / float(W.delta)) / R


def inclusion_check(
    A: ExactMatrix,
    W: Weights,
    seq: BestApproxSequence,
    phi: PhiSubsequence,
    alpha: float,
    samples: int = 200,
    Q_max: float = 1e4,
    slack: float = 1e-6,
    seed: int = 0,
    budget: int | None = None,
    sampler: str = "uniform",
) -> InclusionReport:
    """Sample theta, keep those in Bad^alpha for {y_phi(i)}, and scan each one as a target for A.

    The scan covers c / M_phi(1) < ||q||_s <= c / M_phi(L) with
    c = (alpha / 2n)^(1/delta), capped at Q_max: for those q some phi index
    pins the residual from below, so no violation should appear there.
    ``sampler`` is "uniform" (rejection from [0,1)^m) or "nested" (m = 1).
    """
    if sampler not in ("uniform", "nested"):
        raise PreconditionError(f"unknown sampler {sampler!r}")
    if not seq.records or seq.records[0].y is None:
        raise PreconditionError("inclusion_check needs a sequence with integer records")
    rep = verify_phi(seq, phi)
    if not rep.mgrow_ok:
        raise PreconditionError(f"phi violates growth/quality at {rep.violations[0]['pair']}")
    eps = inclusion_epsilon(W, phi.R, alpha)
    ys = [seq.records[j - 1].y for j in phi.indices]
    lc = math.log(alpha / (2 * W.n)) / float(W.delta)
    lo = math.exp(lc - seq.records[phi.indices[0] - 1].M.log_value)
    hi = min(float(Q_max), math.exp(lc - seq.records[phi.indices[-1] - 1].M.log_value))
    rng = np.random.default_rng(seed)
    if sampler == "nested" and W.m != 1:
        raise ScopeError("the nested-interval sampler needs m = 1")
    out = InclusionReport(eps, alpha, (lo, hi), 0, 0)
    kept = []
    for _ in range(samples):
        th = sample_bad_alpha(ys, alpha, rng) if sampler == "nested" else rng.random(W.m)
        if th is None or not bad_alpha_membership(th, ys, alpha):
            out.excluded += 1
        else:
            kept.append(th)
    out.tested = len(kept)
    if hi <= lo or not kept:
        return out
    qs, ln, res = _residual_table(A, W, hi, lo * (1 + 1e-12), budget)
    B = np.array([[float(x) for x in th] for th in kept], dtype=float).reshape(-1, W.m)
    lim = math.log(eps * (1 - slack)) - DEFAULT_TOL
    for a, b in _chunks(len(B), 64):
        mins, arg = _target_min_log(res, ln, W.rf, B[a:b])
        for i in np.flatnonzero(mins < lim):
            out.violations.append(
                {"theta": B[a + i].tolist(), "q": qs[arg[i]].tolist(), "value": float(math.exp(mins[i]))}
            )
    return out
