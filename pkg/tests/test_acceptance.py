"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from badgrid import (
    ExactMatrix,
    IntegerLattice,
    Parallelepiped,
    PreconditionError,
    TargetVector,
    Weights,
    bad_A_boxcount,
    badness_scan,
    best_approx_sequence,
    build_phi,
    dani_consistency,
    dirichlet_check,
    minkowski_transfer_check,
    no_solution_scales,
    sequence_for,
    soa_verdict,
    transfer_solution,
    verify_phi,
    weighted_boxcount,
)
from badgrid.best_approx import BestApproxSequence
from badgrid.dimension import bad_A_survivors
from badgrid.transference import transfer_constant
from helpers import GOLDEN, GOLDEN_30, liouville, random_matrix, random_weights, record, record_scan_1d


def test_criterion_01_fibonacci_records():
    t0 = time.perf_counter()
    A = ExactMatrix.from_rows([[GOLDEN]])
    seq = best_approx_sequence(A, [1], [1], 1e4)
    dt = time.perf_counter() - t0
    ys = [r.y[0] for r in seq.records]
    oracle = record_scan_1d(GOLDEN, 10**4)
    fib = [1, 2]
    while fib[-1] + fib[-2] <= 10**4:
        fib.append(fib[-1] + fib[-2])
    ok = ys == oracle == fib and dt < 1.0
    record(1, ok, f"{len(ys)} records, last y = {ys[-1]}, {dt:.3f} s")
    assert ys == oracle
    assert oracle == fib
    assert dt < 1.0


def test_criterion_02_dirichlet_invariant():
    rng = random.Random(2)
    t0 = time.perf_counter()
    bad, worst, pairs = [], 0.0, 0
    for i in range(50):
        m, n = rng.randint(1, 3), rng.randint(1, 3)
        W = random_weights(rng, m, n)
        A = random_matrix(rng, m, n, 10**12)
        seq = sequence_for(A, W, 1e4, "tA")
        ok, w = dirichlet_check(seq)
        pairs += len(seq) - 1
        worst = max(worst, w)
        if not ok:
            bad.append(i)
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    record(2, ok, f"{pairs} record pairs, worst M_k Y_k+1 = {worst:.5f}, violations in {bad}, {dt:.1f} s")
    assert not bad
    assert dt < 60


def _solvable_scales(A: ExactMatrix, W: Weights, eps: float, N: int) -> set[int]:
    """Brute force over every y with ||y||_r <= 2^N, residual of tA y under s."""
    m, n = W.m, W.n
    den = A.denominator
    num = np.array([[int(A.entries[i][j] * den) for j in range(n)] for i in range(m)], dtype=np.int64)
    half = [int(math.floor(2.0 ** (N * float(ri)) * (1 + 1e-12))) for ri in W.r]
    axes = [np.arange(-h, h + 1, dtype=np.int64) for h in half]
    ys = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    ys = ys[np.any(ys != 0, axis=1)]
    rem = np.mod(ys @ num, den)
    rem = np.minimum(rem, den - rem).astype(float) / den
    with np.errstate(divide="ignore"):
        lres = np.max(np.log(rem) / W.sf, axis=1)
        lnorm = np.max(np.log(np.abs(ys)) / W.rf, axis=1)
    out = set()
    for l in range(1, N + 1):
        if np.any((lnorm <= l * math.log(2) + 1e-12) & (lres <= math.log(eps) - l * math.log(2))):
            out.add(l)
    return out


def test_criterion_03_interval_criterion():
    rng = random.Random(3)
    shapes = [(1, 1, False), (1, 1, False), (1, 2, False), (1, 2, True), (2, 1, False),
              (2, 1, True), (1, 3, True), (2, 2, False), (1, 1, False), (2, 2, True)]
    N = 20
    t0 = time.perf_counter()
    mismatches = []
    for idx, (m, n, weighted) in enumerate(shapes):
        W = random_weights(rng, m, n, weighted)
        A = random_matrix(rng, m, n, 10**12, horizon=2**21)
        eps = rng.choice([0.2, 0.5, 0.8])
        seq = sequence_for(A, W, 2.0**N, "tA")
        fast = set(no_solution_scales(seq, eps, N))
        brute = set(range(1, N + 1)) - _solvable_scales(A, W, eps, N)
        if fast != brute:
            mismatches.append((idx, sorted(fast ^ brute)))
    dt = time.perf_counter() - t0
    ok = not mismatches and dt < 120
    record(3, ok, f"10 matrices, l <= {N}, mismatches {mismatches}, {dt:.1f} s")
    assert not mismatches
    assert dt < 120


def test_criterion_04_transference():
    rng = random.Random(4)
    t0 = time.perf_counter()
    done, fails, c2 = 0, [], transfer_constant(2)
    while done < 100:
        d = rng.randint(2, 4)
        m = rng.randint(1, d - 1)
        W = random_weights(rng, m, d - m, rng.random() < 0.5)
        A = random_matrix(rng, m, d - m, 10**9)
        eps, T = rng.uniform(0.5, 0.7), float(rng.randint(20, 100))
        try:
            res = transfer_solution(A, W, eps, T)
        except PreconditionError:
            continue  # hypothesis not solvable for this draw
        done += 1
        if not (res.success and res.containment_ok):
            fails.append((d, m, eps, T))
    dt = time.perf_counter() - t0
    ok = not fails and abs(c2 - math.sqrt(2)) < 1e-15 and dt < 300
    record(4, ok, f"{100 - len(fails)}/100 successes, c(2) = {c2:.15f}, {dt:.1f} s")
    assert abs(c2 - math.sqrt(2)) < 1e-15
    assert not fails
    assert dt < 300


def _random_lattice(rng: random.Random, d: int) -> IntegerLattice:
    """Unimodular rational basis: lift of a random rational block times integer shears."""
    m = rng.randint(1, d - 1)
    B = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for i in range(m):
        for j in range(m, d):
            B[i][j] = Fraction(rng.randrange(-20, 21), rng.randint(1, 30))
    for _ in range(3):
        i, j = rng.sample(range(d), 2)
        k = rng.randint(-2, 2)
        for row in B:
            row[j] += k * row[i]
    return IntegerLattice(tuple(tuple(r) for r in B))


def test_criterion_05_minkowski_transference():
    rng = random.Random(5)
    checked, counter, draws = 0, [], 0
    while checked < 200:
        draws += 1
        d = rng.randint(2, 4)
        L = _random_lattice(rng, d)
        lam = [Fraction(rng.randint(25, 250), 100) for _ in range(d)]
        P = Parallelepiped(tuple(lam))
        chk = minkowski_transfer_check(P, L)
        if not chk.hypothesis:
            continue
        checked += 1
        if not chk.holds:
            counter.append((L.basis, lam))
    ok = not counter
    record(5, ok, f"200 pairs with P* cap L* nonzero ({draws} draws), counterexamples {len(counter)}")
    assert not counter


def _synthetic_soa(K: int, seed: int, rate: float = 0.05, clean_tail: int = 0) -> BestApproxSequence:
    """Y doubles each step; M_k Y_k+1 is tiny except on a sparse set of indices.

    The last ``clean_tail`` products are all tiny.
    """
    rng = random.Random(seed)
    ly = [k * math.log(2) for k in range(1, K + 1)]
    lm = []
    for k in range(K):
        nxt = ly[k + 1] if k + 1 < K else ly[k] + math.log(2)
        spike = rng.random() < rate and k < K - clean_tail
        gap = math.log(0.5) if spike else -math.log(10**6) - rng.random()
        lm.append(gap - nxt)
    return BestApproxSequence.from_values(ly, lm)


def test_criterion_06_bugeaud_laurent_contract():
    L = ExactMatrix.from_rows([[liouville(10, 5)]], precision_horizon=10**40)
    L2 = ExactMatrix.from_rows([[liouville(2, 7)]], precision_horizon=10**40)
    W = Weights.unweighted(1, 1)
    data = {
        "synthetic-a": _synthetic_soa(400, 1),
        "synthetic-b": _synthetic_soa(600, 2),
        "synthetic-cofinite": _synthetic_soa(500, 3, clean_tail=300),
        "liouville-10": sequence_for(L, W, 1e30),
        "liouville-2": sequence_for(L2, W, 1e30),
    }
    bad, advisory = [], []
    for name, seq in data.items():
        for R, S in ((2, 8), (3, 27)):
            phi = build_phi(seq, R, S)
            rep = verify_phi(seq, phi)
            # the growth half of the contract, exactly, for every consecutive pair
            ly = seq.logY
            growth = all(ly[b - 1] - ly[a - 1] >= math.log(R) - 1e-12 for a, b in zip(phi.indices, phi.indices[1:]))
            if not (rep.mgrow_ok and growth):
                bad.append((name, R, S, rep.violations[:2]))
            advisory.append(f"{name}/{R}: {rep.path} density {rep.density:.3f} vs {rep.density_bound:.3f}")
    ok = not bad
    record(6, ok, f"violations {bad}; advisory density: " + "; ".join(advisory))
    assert not bad


def test_criterion_07_dani_consistency():
    rng = random.Random(7)
    configs = [(1, 1, False), (1, 2, False), (2, 1, False), (1, 2, True), (2, 1, True)]
    t0 = time.perf_counter()
    incons, marg, inL = [], 0, 0
    for i in range(20):
        m, n, weighted = configs[i % len(configs)]
        W = random_weights(rng, m, n, weighted)
        A = random_matrix(rng, m, n, 10**20, horizon=10**9)
        b = TargetVector(tuple(Fraction(rng.randrange(10**20), 10**20) for _ in range(m)))
        eps = rng.choice([0.3, 0.45, 0.6])
        rep = dani_consistency(A, b, W, eps, 15, budget=30_000_000)
        marg += len(rep.marginals)
        inL += sum(1 for f in rep.orbit_in_L if f is True)
        if not rep.consistent:
            incons.append((i, rep.inconsistencies))
    dt = time.perf_counter() - t0
    ok = not incons and dt < 300
    record(7, ok, f"20 pairs x 16 times, inconsistencies {len(incons)}, marginal {marg}, "
                  f"orbit-in-L times {inL}, {dt:.1f} s")
    assert not incons
    assert dt < 300


def test_criterion_08_golden_anchor():
    A = ExactMatrix.from_rows([[GOLDEN_30]])
    W = Weights.unweighted(1, 1)
    tail = badness_scan(A, None, W, 0.4, 1e5, q_min=100)
    full = badness_scan(A, None, W, 0.4, 1e5)
    # oracle: q |q alpha|_Z over the same tail, in exact arithmetic
    oracle = min(q * abs(q * GOLDEN_30 - round(q * GOLDEN_30)) for q in range(100, 10**5 + 1))
    hurwitz = 1 / math.sqrt(5)
    ok = abs(tail.min_value - float(oracle)) < 1e-12 and abs(tail.min_value - hurwitz) < 1e-3
    record(8, ok, f"tail q >= 100: {tail.min_value:.7f} at q = {tail.witness[0]} (1/sqrt5 = {hurwitz:.7f}); "
                  f"full range from q = 1: {full.min_value:.7f}")
    assert abs(tail.min_value - float(oracle)) < 1e-12
    assert abs(tail.min_value - hurwitz) < 1e-3


def test_criterion_09_dimension_direction():
    t0 = time.perf_counter()
    W = Weights.unweighted(1, 1)
    golden = ExactMatrix.from_rows([[GOLDEN]])
    liou = ExactMatrix.from_rows([[liouville(10, 4)]])
    deltas = [2.0**-k for k in range(4, 11)]
    eps_grid = [0.005, 0.01, 0.03, 0.05, 0.08]
    g = [bad_A_boxcount(golden, W, e, deltas, 1e3) for e in eps_grid]
    lv = [bad_A_boxcount(liou, W, e, deltas, 1e3) for e in eps_grid]
    direction = all(a.fitted_slope > b.fitted_slope for a, b in zip(lv, g))
    slopes = [r.fitted_slope for r in g]
    mono_slope = all(a >= b for a, b in zip(slopes, slopes[1:]))
    mono_count = all(
        all(x >= y for x, y in zip(r1.counts, r2.counts)) for rs in (g, lv) for r1, r2 in zip(rs, rs[1:])
    )
    inclusion = True
    for A in (golden, liou):
        masks = [bad_A_survivors(A, W, e, deltas[-1], 1e3) for e in eps_grid]
        inclusion &= all(bool(np.all(~big | small)) for small, big in zip(masks, masks[1:]))
    dt = time.perf_counter() - t0
    ok = direction and mono_slope and mono_count and inclusion and dt < 600
    fmt = lambda rs: ", ".join(f"{r.fitted_slope:.3f}" for r in rs)
    record(9, ok, f"golden [{fmt(g)}] liouville [{fmt(lv)}] over eps {eps_grid}; "
                  f"inclusion {inclusion}, {dt:.1f} s")
    assert direction
    assert mono_slope
    assert mono_count
    assert inclusion
    assert dt < 600


def test_criterion_10_cube_anchor():
    # sample spacings sit just above the finest separation radius, so no pair lies on a threshold
    levels = [2.0**-k for k in range(2, 6)]
    W = Weights.unweighted(1, 1)
    pts = ((np.arange(4095) + 0.5) / 4095).reshape(-1, 1)
    rs = weighted_boxcount(pts, "rs", levels, W)
    dr = weighted_boxcount(pts, "r", levels, W)
    # weighted 2 x 1 square: entry weights r_i + s_j = 5/3 and 4/3, radii delta^(5/3) and delta^(4/3)
    W21 = Weights((Fraction(2, 3), Fraction(1, 3)), (Fraction(1),))
    x, y = (np.arange(1023) + 0.5) / 1023, (np.arange(255) + 0.5) / 255
    sq = np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1).reshape(-1, 2)
    wrs = weighted_boxcount(sq, "rs", [2.0**-3, 2.0**-6], W21)
    checks = [abs(rs.fitted_slope - 2) <= 0.1, abs(dr.fitted_slope - 1) <= 0.1, abs(wrs.fitted_slope - 3) <= 0.1]
    record(10, all(checks), f"m=n=1: d_rs {rs.fitted_slope:.3f} (target 2), d_r {dr.fitted_slope:.3f} (target 1); "
                            f"r=(2/3,1/3), s=(1): d_rs {wrs.fitted_slope:.3f} (target 3)")
    assert abs(rs.fitted_slope - 2) <= 0.1
    assert abs(dr.fitted_slope - 1) <= 0.1
    assert abs(wrs.fitted_slope - 3) <= 0.1


def test_criterion_11_orientation_symmetry():
    rng = random.Random(11)
    W11 = Weights.unweighted(1, 1)
    cases = []
    shapes = [(1, 2), (2, 1), (2, 2), (1, 3), (3, 1)]
    for i in range(15):
        m, n = shapes[i % len(shapes)]
        cases.append((random_matrix(rng, m, n, 10**15), Weights.unweighted(m, n), 1e6))
    L10, L2 = liouville(10, 5), liouville(2, 6)
    h = 10**40
    cases += [
        (ExactMatrix.from_rows([[L10]], h), W11, 1e12),
        (ExactMatrix.from_rows([[L10]], h), W11, 1e30),
        (ExactMatrix.from_rows([[L2]], h), W11, 1e30),
        (ExactMatrix.from_rows([[L10, L2]], h), Weights.unweighted(1, 2), 1e12),
        (ExactMatrix.from_rows([[L10], [L2]], h), Weights.unweighted(2, 1), 1e12),
    ]
    disagree, verdicts = [], {}
    for i, (A, W, Y) in enumerate(cases):
        rep = soa_verdict(A, W, Y, [0.5, 0.1, 0.02], 0.5)
        per = {o: r["verdict"] for o, r in rep.orientations.items()}
        verdicts[rep.verdict] = verdicts.get(rep.verdict, 0) + 1
        if rep.anomaly or len(set(per.values())) != 1:
            disagree.append((i, per))
    ok = not disagree
    record(11, ok, f"20 matrices, verdict counts {verdicts}, disagreements {disagree}")
    assert not disagree
