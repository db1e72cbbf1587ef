import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedldi.errors import DomainError, ShapeError
from mixedldi.interval import (Interval, IntervalMatrix, IntervalVector, imat_hull, iv_add,
                               iv_div, iv_elem, iv_hull, iv_mul, iv_sub)

TIGHT = 1e-14


def encloses_tightly(res, lo, hi, tol=TIGHT):
    # contains the exact range and exceeds it by widening only
    return (res.lo <= lo and res.hi >= hi
            and lo - res.lo <= tol * (1 + abs(lo)) and res.hi - hi <= tol * (1 + abs(hi)))


def test_add_endpoints():
    assert encloses_tightly(iv_add(Interval(1, 2), Interval(3, 4)), 4, 6)


def test_mul_endpoint_products():
    assert encloses_tightly(iv_mul(Interval(-1, 2), Interval(-3, 1)), -6, 3)


def test_sub_dependency_free():
    a = Interval(0.7)
    assert iv_sub(a, a) == Interval(0.0, 0.0)
    assert encloses_tightly(iv_sub(Interval(-1, 1), Interval(-1, 1)), -2, 2)


def test_div_by_zero_interval():
    with pytest.raises(DomainError):
        iv_div(Interval(1, 2), Interval(-1, 1))
    with pytest.raises(DomainError):
        iv_div(Interval(1, 2), Interval(0, 1))


def test_zero_times_infinity_is_domain_error():
    with pytest.raises(DomainError):
        iv_mul(Interval(0, 1), Interval(0, math.inf))


def test_invalid_construction():
    for lo, hi in ((2, 1), (math.inf, math.inf), (-math.inf, -math.inf), (math.nan, 1)):
        with pytest.raises((DomainError, ValueError)):
            Interval(lo, hi)


def test_elementary_examples():
    assert encloses_tightly(iv_elem("atan", Interval(-1, 1)), -math.pi / 4, math.pi / 4)
    assert encloses_tightly(iv_elem("sin", Interval(0, math.pi)), 0.0, 1.0, 1e-12)
    assert encloses_tightly(iv_elem("cos", Interval(0, 2 * math.pi)), -1.0, 1.0, 1e-12)
    assert encloses_tightly(iv_elem("exp", Interval(0, 1)), 1.0, math.e)
    assert encloses_tightly(iv_elem("sqrt", Interval(4, 9)), 2.0, 3.0)
    assert iv_elem("abs", Interval(-3, 2)) == Interval(0, 3)
    assert iv_elem("neg", Interval(-3, 2)) == Interval(-2, 3)
    assert encloses_tightly(iv_elem("pow_int", Interval(-2, 1), 2), 0.0, 4.0)
    assert encloses_tightly(iv_elem("pow_int", Interval(-2, 1), 3), -8.0, 1.0)


def test_sqrt_domain():
    with pytest.raises(DomainError):
        iv_elem("sqrt", Interval(-1, 1))


def test_atan_unbounded():
    r = iv_elem("atan", Interval(-math.inf, math.inf))
    assert encloses_tightly(r, -math.pi / 2, math.pi / 2)


def test_hull_examples():
    assert iv_hull(Interval(0, 1), Interval(2, 3)) == Interval(0, 3)
    assert iv_hull(Interval(-1, 0), Interval(-2, -1)) == Interval(-2, 0)
    A = IntervalMatrix([[0, 1], [2, 3]], [[1, 1], [4, 5]])
    assert imat_hull(A, A) == A
    with pytest.raises(ShapeError):
        imat_hull(A, IntervalMatrix(np.zeros((3, 3))))


def test_vector_and_matrix_containment():
    X = IntervalVector([0, -1], [1, 1])
    assert X.contains([0.5, 0.0])
    assert not X.contains([1.5, 0.0])
    A = IntervalMatrix([[0, 1], [2, 3]], [[1, 1], [4, 5]])
    assert A.contains([[0.5, 1], [3, 4]])
    assert not A.contains([[0.5, 2], [3, 4]])
    v = A.matvec([1.0, -1.0])
    assert v.lo[0] <= -0.5 <= v.hi[0]


def test_immutable():
    a = Interval(0, 1)
    with pytest.raises(AttributeError):
        a.lo = 2
    X = IntervalVector([0], [1])
    with pytest.raises(ValueError):
        X.lo[0] = 5


# --------------------------------------------------------------------------
# soundness suite


BINARY = {"add": (iv_add, np.add), "sub": (iv_sub, np.subtract), "mul": (iv_mul, np.multiply),
          "div": (iv_div, np.divide)}
UNARY = {"sin": np.sin, "cos": np.cos, "atan": np.arctan, "exp": np.exp, "sqrt": np.sqrt,
         "abs": np.abs, "neg": np.negative}


def random_interval(rng, scale=5.0):
    a, b = np.sort(rng.uniform(-scale, scale, 2))
    if rng.random() < 0.1:
        b = a
    return Interval(a, b)


def samples(rng, a, k=100):
    s = a.lo + (a.hi - a.lo) * rng.random(k)
    return np.concatenate([s, [a.lo, a.hi]])


def interval_violations(rng, triples=10_000, per=100):
    bad = 0
    for _ in range(triples):
        name = list(BINARY)[rng.integers(4)]
        a, b = random_interval(rng), random_interval(rng)
        if name == "div" and b.lo <= 0 <= b.hi:
            b = Interval(b.lo + 5.5, b.hi + 6.0)
        op_iv, op = BINARY[name]
        r = op_iv(a, b)
        x, y = samples(rng, a, per), rng.permutation(samples(rng, b, per))
        v = op(x, y)
        bad += int(np.sum((v < r.lo) | (v > r.hi)))
    for _ in range(triples // 5):
        name = list(UNARY)[rng.integers(len(UNARY))]
        a = random_interval(rng, 10.0)
        if name == "sqrt":
            a = Interval(abs(a.lo) if a.lo >= 0 else 0.0, abs(a.hi) + 1.0)
        r = iv_elem(name, a)
        v = UNARY[name](samples(rng, a, per))
        bad += int(np.sum((v < r.lo) | (v > r.hi)))
        k = int(rng.integers(0, 6))
        r = iv_elem("pow_int", a, k)
        v = samples(rng, a, per) ** k
        bad += int(np.sum((v < r.lo) | (v > r.hi)))
    return bad


def test_soundness_random_triples():
    assert interval_violations(np.random.default_rng(0), 2000, 100) == 0


finite = st.floats(-1e3, 1e3, allow_nan=False)


@st.composite
def intervals(draw):
    a, b = sorted((draw(finite), draw(finite)))
    return Interval(a, b)


@settings(max_examples=300, deadline=None)
@given(intervals(), intervals(), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from(["add", "sub", "mul"]))
def test_inclusion_monotone(a, b, s, u, name):
    # shrink a to a sub-interval and check the result shrinks too
    w = a.hi - a.lo
    lo = a.lo + s * w * 0.5
    hi = a.hi - u * w * 0.5
    inner = Interval(min(lo, hi), max(lo, hi))
    op = BINARY[name][0]
    assert op(inner, b).subset(op(a, b))


@settings(max_examples=300, deadline=None)
@given(finite, finite, st.sampled_from(["add", "sub", "mul"]))
def test_degenerate_exactness(x, y, name):
    op_iv, op = BINARY[name]
    r = op_iv(Interval(x), Interval(y))
    v = op(x, y)
    assert r.lo <= v <= r.hi
    assert r.hi - r.lo <= 16 * np.finfo(float).eps * max(abs(v), 1e-300)


@settings(max_examples=200, deadline=None)
@given(intervals(), st.sampled_from(list(UNARY)))
def test_unary_monotone(a, name):
    if name == "sqrt":
        a = Interval(max(a.lo, 0.0), max(a.hi, 0.0))
    if name == "exp":
        a = Interval(min(a.lo, 700), min(a.hi, 700))
    mid = 0.5 * (a.lo + a.hi)
    assert iv_elem(name, Interval(mid)).subset(iv_elem(name, a))
