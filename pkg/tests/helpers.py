"""Shared generators and brute-force oracles for the tests.

The oracles deliberately avoid the package: plain integer arithmetic and
Fractions only.
"""

import math
import random
from fractions import Fraction

from badgrid import ExactMatrix, Weights

# criterion number -> (passed, detail); printed at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

GOLDEN = Fraction(6180339887, 10**10)
# the 10-digit literal drifts from the golden ratio near q = 75025; this one is faithful far beyond 1e5
GOLDEN_30 = Fraction("0.618033988749894848204586834365638")


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (ok, detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def liouville(base: int, terms: int) -> Fraction:
    return sum((Fraction(1, base ** math.factorial(k)) for k in range(1, terms + 1)), Fraction(0))


def random_matrix(rng: random.Random, m: int, n: int, den: int, horizon: int | None = None) -> ExactMatrix:
    rows = [[Fraction(rng.randrange(1, den), den) for _ in range(n)] for _ in range(m)]
    return ExactMatrix.from_rows(rows, horizon)


def random_weights(rng: random.Random, m: int, n: int, weighted: bool = True) -> Weights:
    def draw(k):
        if k == 1:
            return (Fraction(1),)
        if not weighted:
            return (Fraction(1, k),) * k
        raw = sorted((rng.randint(1, 6) for _ in range(k)), reverse=True)
        tot = sum(raw)
        return tuple(Fraction(x, tot) for x in raw)

    return Weights(draw(m), draw(n))


def qnorm(x, w) -> float:
    """max |x_i|^(1/w_i) in floats, straight from the definition."""
    return max(abs(float(a)) ** (1.0 / float(b)) for a, b in zip(x, w))


def nearest_dist(x: Fraction) -> Fraction:
    return abs(x - round(x))


def record_scan_1d(alpha: Fraction, Y: int) -> list[int]:
    """q in 1..Y whose distance |q alpha|_Z beats every smaller q."""
    out, best = [], None
    for q in range(1, Y + 1):
        d = nearest_dist(q * alpha)
        if best is None or d < best:
            out.append(q)
            best = d
    return out
