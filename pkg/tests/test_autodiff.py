import math

import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import random_box, random_point_in, random_poly_field
from mixedldi import bench
from mixedldi.autodiff import (DualInterval, column_corners, corners, eval_dual, jac_point,
                               jacM, ldi_corners, mjacM)
from mixedldi.errors import CapacityError, PreconditionError
from mixedldi.interval import Interval, IntervalMatrix, IntervalVector
from mixedldi.vfield import parse_system

M_EX2 = [np.array(M, float) for M in bench.case_poly().expected["corners"][0]]


def close_interval(iv, lo, hi, tol=1e-13):
    return iv.lo <= lo and iv.hi >= hi and lo - iv.lo <= tol and iv.hi - hi <= tol


def same_set(A, B, tol=1e-12):
    return bench._same_matrix_set(A, B, tol)


def test_jac_point_examples(poly, taninv):
    assert np.allclose(jac_point(poly, 0.0, [1.0, 1.0]), [[0, 3], [0, -2]], atol=1e-15)
    for t in (0.0, 0.3, 1.7):
        assert np.allclose(jac_point(taninv, t, [0.0, 1.0]), [[-2, 0], [0, -1]], atol=1e-15)


def test_jac_point_linear(rng):
    A = rng.uniform(-3, 3, (3, 3))
    lines = ["states x1 x2 x3"]
    for i in range(3):
        terms = " + ".join(f"{float(A[i, j])!r}*x{j + 1}" for j in range(3))
        lines.append(f"dx{i + 1} = {terms}")
    f = parse_system("\n".join(lines))
    for _ in range(5):
        assert np.allclose(jac_point(f, 0.0, rng.uniform(-5, 5, 3)), A, rtol=0, atol=1e-14)


def test_jacM_examples(poly, l1demo):
    J = jacM(poly, 0.0, IntervalVector([-1, -1], [1, 1]))
    assert close_interval(J[0, 0], -4.0, 0.0)
    d = 0.1
    J = jacM(l1demo, 0.0, IntervalVector([-d, -math.inf], [1.0, math.inf]))
    assert close_interval(J[1, 1], -2.0, -1.0 + d)


def test_mjacM_quadratic_example(poly):
    A = mjacM(poly, 0.0, IntervalVector([-1, -1], [1, 1]), [0.0, 0.0])
    assert close_interval(A[0, 0], -3, -1)
    assert close_interval(A[0, 1], -1, 3)
    assert close_interval(A[1, 0], -2, 0)
    assert close_interval(A[1, 1], -2, -2)


def test_mjacM_degenerate_box_is_point_jacobian(rng):
    for _ in range(30):
        f = random_poly_field(rng)
        x = rng.uniform(-2, 2, f.dim)
        A = mjacM(f, 0.0, IntervalVector(x, x), x)
        D = jac_point(f, 0.0, x)
        assert A.contains(D)
        assert np.all(A.hi - A.lo <= 1e-12 * (1 + np.abs(D)))
        assert jacM(f, 0.0, IntervalVector(x, x)).contains(D)


def test_mjacM_time_varying_example(taninv):
    for X1 in ((-5.0, 5.0), (0.2, 0.9), (-math.inf, math.inf)):
        X = IntervalVector([X1[0], -3.0], [X1[1], 4.0])
        A = mjacM(taninv, Interval(0, 1), X, [0.5 * (X1[0] + X1[1]) if math.isfinite(X1[0])
                                            else 0.0, 0.0])
        # exactly -1 up to widening, which the corner rule treats as degenerate
        assert close_interval(A[0, 0], -1, -1, 1e-14)
        assert A.degenerate_mask(1e-12)[0, 0]
        assert close_interval(A[0, 1], -math.atan(X1[1]), -math.atan(X1[0]), 1e-14)


def test_mjacM_requires_xprime_in_box(poly):
    with pytest.raises(PreconditionError):
        mjacM(poly, 0.0, IntervalVector([-1, -1], [1, 1]), [2.0, 0.0])


def test_corners_examples(poly, robotarm):
    D = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert len(corners(IntervalMatrix.from_point(D))) == 1
    A = mjacM(poly, 0.0, IntervalVector([-1, -1], [1, 1]), [0.0, 0.0])
    box = corners(A)
    assert len(box) == 8
    # the box corners enclose the printed four; the column-wise ones are exactly them
    Ms, method, _ = ldi_corners(poly, 0.0, IntervalVector([-1, -1], [1, 1]), [0.0, 0.0])
    assert method == "columns" and same_set(Ms, M_EX2)
    for M in M_EX2:
        assert A.contains(M)
    assert len(corners(bench.robot_step_hull(robotarm, 0.01, "mjac"))) == 64


def test_corner_hull_covers_box(rng):
    for _ in range(20):
        lo = rng.uniform(-1, 0, (2, 2))
        hi = lo + rng.uniform(0, 1, (2, 2)) * (rng.random((2, 2)) < 0.7)
        A = IntervalMatrix(lo, hi)
        C = corners(A)
        assert len(C) == 2 ** int(np.sum(hi - lo > 1e-12 * (1 + np.abs(lo))))
        S = lo + (hi - lo) * rng.random((2, 2))
        assert in_hull(S.ravel(), np.array([M.ravel() for M in C]))


def test_corners_capacity():
    A = IntervalMatrix(np.zeros((5, 5)), np.ones((5, 5)))
    with pytest.raises(CapacityError):
        corners(A, max_nondegenerate=20)


def test_degenerate_threshold():
    A = IntervalMatrix([[1.0]], [[1.0 + 1e-13]])
    assert len(corners(A)) == 1
    A = IntervalMatrix([[1.0]], [[1.0 + 1e-9]])
    assert len(corners(A)) == 2


# --------------------------------------------------------------------------
# containment properties


def in_hull(v, V) -> bool:
    k = len(V)
    A_eq = np.vstack([V.T, np.ones(k)])
    b_eq = np.concatenate([v, [1.0]])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status == 0:
        return True
    # allow round-off: distance to the hull by least squares over the simplex
    res = linprog(np.concatenate([np.zeros(k), np.ones(2 * len(v))]),
                  A_eq=np.hstack([A_eq, np.vstack([np.eye(len(v)), np.zeros(len(v))]),
                                  np.vstack([-np.eye(len(v)), np.zeros(len(v))])]),
                  b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0 and res.fun <= 1e-9 * (1 + np.abs(v).max())


def containment_violations(rng, cases, per_case, lp_cases=0):
    sub_bad = ldi_bad = straight_bad = hull_bad = 0
    for c in range(cases):
        f = random_poly_field(rng)
        X = random_box(rng, f.dim)
        xp = random_point_in(rng, X)
        M = mjacM(f, 0.0, X, xp)
        J = jacM(f, 0.0, X)
        sub_bad += int(not M.subset(J))
        xs = random_point_in(rng, X, per_case)
        fx = f(0.0, xs.T).T
        fp = f(0.0, xp)
        for x, v in zip(xs, fx):
            d = v - fp
            slack = 1e-12 * (1 + np.abs(v) + np.abs(fp))
            for A, counter in ((M, "ldi"), (J, "straight")):
                e = A.matvec(x - xp)
                if np.any(d < e.lo - slack) or np.any(d > e.hi + slack):
                    if counter == "ldi":
                        ldi_bad += 1
                    else:
                        straight_bad += 1
        if c < lp_cases and f.dim <= 3:
            C = corners(M)
            if len(C) <= 512:
                for x in xs[:5]:
                    d = f(0.0, x) - fp
                    V = np.array([Mc @ (x - xp) for Mc in C])
                    hull_bad += int(not in_hull(d, V))
    return sub_bad, ldi_bad, straight_bad, hull_bad


def test_mixed_inside_full_and_ldi_containment(rng):
    sub_bad, ldi_bad, straight_bad, hull_bad = containment_violations(rng, 200, 50, lp_cases=40)
    assert (sub_bad, ldi_bad, straight_bad, hull_bad) == (0, 0, 0, 0)


def test_column_corners_cover_mixed_jacobians(rng):
    for _ in range(40):
        f = random_poly_field(rng, max_degree=2)
        n = f.dim
        X = random_box(rng, n)
        xp = random_point_in(rng, X)
        C = column_corners(f, 0.0, X, xp)
        A = mjacM(f, 0.0, X, xp)
        for M in C:
            assert A.contains(M) or np.all((M >= A.lo - 1e-12) & (M <= A.hi + 1e-12))
        for _ in range(10):
            x = random_point_in(rng, X)
            s = rng.random(n)
            for j in range(n):
                pt = np.concatenate([x[:j], [s[j] * x[j] + (1 - s[j]) * xp[j]], xp[j + 1:]])
                col = jac_point(f, 0.0, pt)[:, j]
                assert in_hull(col, np.array([M[:, j] for M in C]))


def test_jac_point_central_differences(rng):
    smooth = [
        "states x1 x2; dx1 = sin(x1)*x2 + exp(0.3*x2); dx2 = atan(x1 - x2) - x1^3",
        "states a b c; da = cos(a*b) + sqrt(1 + c^2); db = a/(2 + b^2); dc = exp(-a^2)*c",
    ]
    fields = [parse_system(s) for s in smooth] + [random_poly_field(rng) for _ in range(20)]
    worst = 0.0
    for f in fields:
        for _ in range(10):
            x = rng.uniform(-2, 2, f.dim)
            D = jac_point(f, 0.0, x)
            for j in range(f.dim):
                h = 1e-5 * (1 + abs(x[j]))
                e = np.zeros(f.dim)
                e[j] = h
                fd = (f(0.0, x + e) - f(0.0, x - e)) / (2 * h)
                err = np.abs(fd - D[:, j]) / (1 + np.abs(D[:, j]))
                worst = max(worst, float(err.max()))
    assert worst <= 1e-6


def test_dual_interval_matches_tape(rng):
    # the tree-walking evaluator and the compiled tape follow the same rules
    for _ in range(60):
        f = random_poly_field(rng)
        X = random_box(rng, f.dim)
        xp = random_point_in(rng, X)
        A = mjacM(f, 0.0, X, xp)
        J = jacM(f, 0.0, X)
        n = f.dim
        for j in range(n):
            boxes = [X[i] if i <= j else Interval(xp[i]) for i in range(n)]
            for i, e in enumerate(f.working):
                d = eval_dual(e, 0.0, boxes, [j])
                assert d.partials[0] == A[i, j]
        for i, e in enumerate(f.working):
            d = eval_dual(e, 0.0, list(X))
            assert all(d.partials[k] == J[i, k] for k in range(n))


def test_dual_interval_rules():
    x = DualInterval.variable(Interval(1, 2), 0, 1)
    y = (x * x).sin()
    assert y.partials[0].contains(2 * 1.5 * math.cos(1.5 ** 2))
    c = DualInterval.constant(Interval(3.0), 1)
    assert c.partials[0] == Interval(0.0)
