import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from badgrid import (
    BudgetError,
    ExactMatrix,
    FlowElement,
    Grid,
    PreconditionError,
    TargetVector,
    Weights,
    apply_flow,
    escape_fraction,
    grid_min,
    height,
    in_L_epsilon,
    lift_point,
    orbit_scan,
)
from badgrid.lattice import Frame, _inverse_fraction, box_points, lll_columns
from badgrid.quasinorm import MARGINAL


def brute_box(basis, shift, h):
    """Every k with |B k + s|_i <= h_i, by scanning a provably large enough coefficient box."""
    d = len(basis)
    den = math.lcm(*[x.denominator for row in basis for x in row])
    inv = _inverse_fraction([[int(x * den) for x in row] for row in basis])
    inv = [[x * den for x in row] for row in inv]
    hf = [Fraction(x) for x in h]
    bound = [math.ceil(sum(abs(inv[i][j]) * (hf[j] + abs(shift[j])) for j in range(d))) for i in range(d)]
    out = set()
    for k in itertools.product(*[range(-b, b + 1) for b in bound]):
        x = [sum(basis[i][j] * k[j] for j in range(d)) + shift[i] for i in range(d)]
        if all(abs(x[i]) <= hf[i] for i in range(d)):
            out.add(k)
    return out


@st.composite
def rational_frames(draw):
    d = draw(st.integers(2, 3))
    while True:
        basis = [[Fraction(draw(st.integers(-6, 6)), draw(st.integers(1, 4))) for _ in range(d)] for _ in range(d)]
        if Frame.from_fractions(basis).det_exact() != 0:
            break
    shift = [Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 5))) for _ in range(d)]
    h = [Fraction(draw(st.integers(1, 12)), 4) for _ in range(d)]
    return basis, shift, h


@settings(suppress_health_check=[HealthCheck.large_base_example])
@given(rational_frames())
def test_box_points_matches_brute_force(case):
    basis, shift, h = case
    pts = box_points(Frame.from_fractions(basis, shift), [float(x) for x in h])
    got = {tuple(int(x) for x in k) for k in pts.coeffs}
    assert got == brute_box(basis, shift, h)


def test_box_points_respects_budget():
    frame = Frame.from_fractions([[1, 0], [0, 1]])
    with pytest.raises(BudgetError):
        box_points(frame, [1000.0, 1000.0], budget=100)


def test_lll_preserves_lattice():
    cols = [[1, 0, 0], [0, 1, 0], [97, 53, 1]]
    red = lll_columns([c[:] for c in cols])
    M = Frame.from_fractions([[Fraction(c[i]) for c in red] for i in range(3)])
    assert abs(M.det_exact()) == 1


# grids ------------------------------------------------------------------------

def test_grid_requires_unit_determinant():
    with pytest.raises(PreconditionError):
        Grid.from_rational([[2, 0], [0, 1]])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_flow_is_a_group_action(s, t):
    W = Weights((Fraction(2, 3), Fraction(1, 3)), (Fraction(1),))
    A = ExactMatrix.from_rows([["1/3"], ["2/7"]])
    g = lift_point(A)
    a = apply_flow(FlowElement(s), apply_flow(FlowElement(t), g, W), W)
    b = apply_flow(FlowElement(s + t), g, W)
    assert np.allclose(a.basis, b.basis, rtol=1e-12, atol=1e-12)
    assert abs(np.linalg.det(a.basis) - 1) < 1e-9


def test_lift_point_basis_and_shift():
    A = ExactMatrix.from_rows([["1/2", "1/3"]])
    g = lift_point(A, TargetVector(("1/5",)))
    assert np.allclose(g.basis, [[1, 0.5, 1 / 3], [0, 1, 0], [0, 0, 1]])
    assert np.allclose(g.shift, [-0.2, 0, 0])
    assert not g.is_lattice
    assert lift_point(A).is_lattice


def test_grid_min_standard_lattice():
    W = Weights.unweighted(1, 1)
    gm = grid_min(Grid.standard(2), W)
    assert gm.value.value == 1.0
    # (+-1, +-1) ties with the unit vectors under the max-type quasinorm; lexicographic order picks (-1, -1)
    assert gm.coeffs == (-1, -1)


def brute_grid_min(g: Grid, W: Weights, reach: int = 30) -> float:
    B, s = g.basis, g.shift
    best = math.inf
    for k in itertools.product(range(-reach, reach + 1), repeat=g.d):
        v = B @ np.array(k, dtype=float) + s
        if not np.any(v):
            continue
        x, y = v[: W.m], v[W.m :]
        val = max(max(abs(a) ** (W.d / (W.m * float(r))) for a, r in zip(x, W.r)),
                  max(abs(a) ** (W.d / (W.n * float(r))) for a, r in zip(y, W.s)))
        best = min(best, val)
    return best


@given(st.integers(1, 40), st.integers(41, 97), st.integers(0, 20), st.floats(0, 2))
def test_grid_min_matches_brute_force(p, q, bnum, t):
    assume(math.gcd(p, q) == 1)
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([[Fraction(p, q)]])
    g = apply_flow(FlowElement(t), lift_point(A, TargetVector((Fraction(bnum, 21),))), W)
    gm = grid_min(g, W)
    assert math.isclose(gm.value.value, brute_grid_min(g, W), rel_tol=1e-9)


def test_in_L_epsilon_shifted_lattice():
    W = Weights.unweighted(1, 1)
    g = Grid.standard(2, shift=[Fraction(1, 2), Fraction(1, 2)])
    # every point has max(|x|^2, |y|^2) >= 1/4
    assert in_L_epsilon(g, 0.2, W) is True
    assert in_L_epsilon(g, 0.25, W) == MARGINAL
    assert in_L_epsilon(g, 0.3, W) is False


def test_lattices_are_never_in_L_epsilon():
    # the zero vector belongs to every lattice
    assert in_L_epsilon(Grid.standard(2), 0.01, Weights.unweighted(1, 1)) is False


@given(st.floats(0, 6))
def test_height_of_flowed_standard_lattice(t):
    W = Weights.unweighted(1, 1)
    g = apply_flow(FlowElement(t), Grid.standard(2), W)
    assert math.isclose(height(g), math.exp(t), rel_tol=1e-9)


def test_height_rejects_shifted_grid():
    with pytest.raises(PreconditionError):
        height(Grid.standard(2, shift=[Fraction(1, 2), 0]))


def test_escape_fraction_bounds():
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([["6180339887/10000000000"]])
    assert escape_fraction(A, W, 8, 1e6) == 0.0
    f = escape_fraction(A, W, 8, 1.0)
    assert 0.0 <= f <= 1.0


def test_escape_fraction_rational_eventually_escapes():
    # x_A for A = 1/3 contains (0, 3), so a_l x_A has a vector of sup length 3 e^-l < 1/100 once l >= 6
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([["1/3"]], precision_horizon=10**6)
    assert escape_fraction(A, W, 10, 100.0) == pytest.approx(0.5)


def test_escape_fraction_zero_matrix_always_escapes():
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([["0"]], precision_horizon=10**60)
    assert escape_fraction(A, W, 100, 2.0) == 1.0


def test_escape_fraction_convergent_counts_cusp_times():
    # (0, 1597) lies in x_A, so ht > 100 exactly when 1597 e^-l < 1/100, i.e. l >= 12
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([["987/1597"]], precision_horizon=10**12)
    assert escape_fraction(A, W, 20, 100.0) == pytest.approx(9 / 20)


def test_orbit_scan_samples():
    W = Weights.unweighted(1, 1)
    A = ExactMatrix.from_rows([["6180339887/10000000000"]])
    out = orbit_scan(A, TargetVector(("1/3",)), W, 0.1, 5)
    assert [s.t for s in out] == list(range(6))
    assert all(s.height >= 1.0 - 1e-12 for s in out)
