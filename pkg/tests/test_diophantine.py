import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from badgrid import (
    BudgetError,
    ExactMatrix,
    PrecisionError,
    PreconditionError,
    RationalPairError,
    TargetVector,
    Weights,
    badness_scan,
    dani_consistency,
    is_rational_pair,
    zeta,
)
from badgrid.diophantine import CONSISTENT, VIOLATES, q_box
from badgrid.quasinorm import MARGINAL
from helpers import GOLDEN, nearest_dist


def brute_badness(A: ExactMatrix, b, W: Weights, Q: float) -> float:
    m, n = A.shape
    bc = b.coords if b is not None else (Fraction(0),) * m
    halves = [int(math.floor(Q ** float(s) + 1e-9)) for s in W.s]
    best = math.inf
    for q in itertools.product(*[range(-h, h + 1) for h in halves]):
        if not any(q):
            continue
        nq = max(abs(x) ** (1 / float(s)) for x, s in zip(q, W.s) if x) if any(q) else 0.0
        if nq > Q * (1 + 1e-12):
            continue
        res = [nearest_dist(sum(A.entries[i][j] * q[j] for j in range(n)) - bc[i]) for i in range(m)]
        nr = max(float(r) ** (1 / float(w)) for r, w in zip(res, W.r))
        best = min(best, nq * nr)
    return best


@st.composite
def small_problems(draw):
    m, n = draw(st.integers(1, 2)), draw(st.integers(1, 2))
    W = Weights.unweighted(m, n)
    A = ExactMatrix.from_rows(
        [[Fraction(draw(st.integers(0, 10**6)), 10**6 + 3) for _ in range(n)] for _ in range(m)]
    )
    b = TargetVector(tuple(Fraction(draw(st.integers(0, 99)), 101) for _ in range(m)))
    Q = draw(st.sampled_from([10.0, 30.0, 60.0]))
    return A, b, W, Q


@given(small_problems())
def test_badness_matches_brute_force(case):
    A, b, W, Q = case
    res = badness_scan(A, b, W, 0.1, Q)
    assert math.isclose(res.min_value, brute_badness(A, b, W, Q), rel_tol=1e-9, abs_tol=1e-15)


def test_badness_verdicts():
    A = ExactMatrix.from_rows([[GOLDEN]])
    W = Weights.unweighted(1, 1)
    # the minimum over q <= 1000 is 2 - phi = 0.381966... at q = 1
    assert badness_scan(A, None, W, 0.3, 1000).verdict == CONSISTENT
    assert badness_scan(A, None, W, 0.5, 1000).verdict == VIOLATES
    low = badness_scan(A, None, W, 0.3, 1000)
    assert low.witness == (1,)
    assert badness_scan(A, None, W, low.min_value, 1000).verdict == MARGINAL


def test_badness_tail_skips_small_q():
    A = ExactMatrix.from_rows([[GOLDEN]])
    W = Weights.unweighted(1, 1)
    res = badness_scan(A, None, W, 0.4, 1000, q_min=100)
    assert abs(res.witness[0]) >= 100


def test_badness_past_horizon_raises():
    A = ExactMatrix.from_rows([["1/3"]])
    with pytest.raises(PrecisionError):
        badness_scan(A, None, Weights.unweighted(1, 1), 0.1, 100)


def test_q_box_budget():
    with pytest.raises(BudgetError):
        q_box([Fraction(1, 2), Fraction(1, 2)], 1e8, budget=1000)


def test_q_box_counts():
    qs = q_box([Fraction(1, 2), Fraction(1, 2)], 16)
    assert len(qs) == 81  # |q_i| <= 4


# zeta ---------------------------------------------------------------------------

def brute_zeta(b, T):
    """Exact search for the least N with min_{q <= N} |q b|_Z * N <= T^2."""
    T2 = Fraction(T) ** 2
    best, N = None, 1
    while True:
        d = max(nearest_dist(N * x) for x in b)
        best = d if best is None else min(best, d)
        if best * N <= T2:
            return N
        N += 1


def test_zeta_half():
    assert zeta([Fraction(1, 2)], 1) == 1


@given(st.lists(st.fractions(0, 1, max_denominator=50), min_size=1, max_size=3), st.sampled_from([0.3, 0.5, 1.0]))
def test_zeta_matches_brute_force(b, T):
    assert zeta(b, T) == brute_zeta(b, T)


def test_zeta_cap():
    with pytest.raises(BudgetError):
        zeta([Fraction(1, 10**9 + 7)], 1e-6, cap=1000)


# rationality and the orbit cross-check ------------------------------------------

def test_is_rational_pair():
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([["1/3"]], precision_horizon=100)
    assert is_rational_pair(A, None, W, 10) == (3,)
    assert is_rational_pair(A, TargetVector(("2/3",)), W, 10) == (-1,)  # -1/3 - 2/3 = -1
    assert is_rational_pair(ExactMatrix.from_rows([[GOLDEN]]), None, W, 50) is None


def test_dani_consistency_generic_pair():
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([[GOLDEN]])
    rep = dani_consistency(A, TargetVector(("1/7",)), W, 0.4, 8)
    assert rep.consistent
    assert rep.times == list(range(9))


def test_dani_consistency_weighted():
    W = Weights((Fraction(2, 3), Fraction(1, 3)), (Fraction(1),))
    A = ExactMatrix.from_rows([["31415926535/100000000000"], ["27182818284/100000000000"]])
    rep = dani_consistency(A, TargetVector(("1/5", "3/11")), W, 0.3, 8)
    assert rep.consistent


def test_dani_rejects_rational_pairs():
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([["1/3"]], precision_horizon=10**6)
    with pytest.raises(RationalPairError):
        dani_consistency(A, TargetVector(("2/3",)), W, 0.5, 4)


def test_dani_rejects_small_scan_radius():
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([[GOLDEN]])
    with pytest.raises(PreconditionError):
        dani_consistency(A, None, W, 0.5, 6, Q_max=10)
