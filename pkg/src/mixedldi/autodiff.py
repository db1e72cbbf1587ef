"""Forward-mode differentiation over points and intervals.

``jacM`` and ``mjacM`` run on the compiled tape kernels.  ``DualInterval``
with :func:`eval_dual` is an independent tree-walking implementation of the
same rules, kept as a cross-check and for ad-hoc use.
"""
from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from . import _ivcore as core
from . import kernels
from .config import DEFAULT
from .errors import CapacityError, DomainError, PreconditionError, ShapeError
from .interval import Interval, IntervalMatrix, IntervalVector
from .vfield import Expr, VectorField

_ZERO = (0.0, 0.0)


class DualInterval:
    """An interval value together with interval enclosures of its partials."""

    __slots__ = ("value", "partials")

    def __init__(self, value, partials):
        self.value = Interval.coerce(value)
        if not isinstance(partials, IntervalVector):
            partials = IntervalVector.from_intervals(partials)
        self.partials = partials

    @classmethod
    def constant(cls, value, n: int) -> "DualInterval":
        return cls(value, IntervalVector(np.zeros(n)))

    @classmethod
    def variable(cls, value, i: int, n: int) -> "DualInterval":
        d = np.zeros(n)
        d[i] = 1.0
        return cls(value, IntervalVector(d))

    @property
    def n(self) -> int:
        return len(self.partials)

    def _pairs(self):
        return list(zip(self.partials.lo.tolist(), self.partials.hi.tolist()))

    def _lift(self, other) -> "DualInterval":
        if isinstance(other, DualInterval):
            if other.n != self.n:
                raise ShapeError(f"dual numbers with {self.n} and {other.n} partials")
            return other
        return DualInterval.constant(other, self.n)

    @staticmethod
    def _make(value, pairs) -> "DualInterval":
        return DualInterval(Interval._raw(value),
                            IntervalVector([p[0] for p in pairs], [p[1] for p in pairs]))

    def __add__(self, other):
        o = self._lift(other)
        v = core.add(*self.value, *o.value)
        return self._make(v, [core.add(*p, *q) for p, q in zip(self._pairs(), o._pairs())])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        v = core.sub(*self.value, *o.value)
        return self._make(v, [core.sub(*p, *q) for p, q in zip(self._pairs(), o._pairs())])

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return self._make(core.neg(*self.value), [core.neg(*p) for p in self._pairs()])

    def __mul__(self, other):
        o = self._lift(other)
        a, b = tuple(self.value), tuple(o.value)
        v = core.mul(*a, *b)
        out = []
        for da, db in zip(self._pairs(), o._pairs()):
            p1 = _ZERO if da == _ZERO else core.mul(*da, *b)
            p2 = _ZERO if db == _ZERO else core.mul(*a, *db)
            out.append(core.add(*p1, *p2))
        return self._make(v, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        b = tuple(o.value)
        q = core.div(*self.value, *b)
        out = []
        for da, db in zip(self._pairs(), o._pairs()):
            p = _ZERO if db == _ZERO else core.mul(*q, *db)
            out.append(core.div(*core.sub(*da, *p), *b))
        return self._make(q, out)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, k: int):
        k = int(k)
        a = tuple(self.value)
        v = core.powi(*a, k)
        if k == 0:
            return self._make(v, [_ZERO] * self.n)
        if k == 1:
            return self._make(v, self._pairs())
        g = core.mul(float(k), float(k), *core.powi(*a, k - 1))
        return self._make(v, [_ZERO if d == _ZERO else core.mul(*g, *d) for d in self._pairs()])

    def _chain(self, value, g) -> "DualInterval":
        return self._make(value, [_ZERO if d == _ZERO else core.mul(*g, *d) for d in self._pairs()])

    def sin(self):
        a = tuple(self.value)
        return self._chain(core.isin(*a), core.icos(*a))

    def cos(self):
        a = tuple(self.value)
        s = core.isin(*a)
        return self._chain(core.icos(*a), (-s[1], -s[0]))

    def exp(self):
        v = core.iexp(*self.value)
        return self._chain(v, v)

    def abs(self):
        a = tuple(self.value)
        return self._chain(core.iabs(*a), core.sign(*a))

    def atan(self):
        a = tuple(self.value)
        den = core.add(1.0, 1.0, *core.powi(*a, 2))
        return self._make(core.iatan(*a),
                          [_ZERO if d == _ZERO else core.div(*d, *den) for d in self._pairs()])

    def sqrt(self):
        v = core.isqrt(*self.value)
        den = core.mul(2.0, 2.0, *v)
        return self._make(v, [_ZERO if d == _ZERO else core.div(*d, *den) for d in self._pairs()])

    def __repr__(self):
        return f"DualInterval({self.value!r}, {self.partials!r})"


def eval_dual(e: Expr, t, boxes: Sequence[Interval], seeds: Sequence[int] | None = None
              ) -> DualInterval:
    """Evaluate ``e`` with dual-interval arithmetic by walking the tree.

    ``seeds`` lists the variables whose partials are tracked (all by default).
    """
    t = Interval.coerce(t)
    boxes = [Interval.coerce(b) for b in boxes]
    seeds = list(range(len(boxes))) if seeds is None else list(seeds)
    m = len(seeds)
    pos = {s: k for k, s in enumerate(seeds)}
    memo: dict[int, DualInterval] = {}

    def go(node: Expr) -> DualInterval:
        key = id(node)
        if key in memo:
            return memo[key]
        kind = node.kind
        if kind == "const":
            r = DualInterval.constant(Interval(node.value), m)
        elif kind == "var":
            i = int(node.value)
            r = (DualInterval.variable(boxes[i], pos[i], m) if i in pos
                 else DualInterval.constant(boxes[i], m))
        elif kind == "time":
            r = DualInterval.constant(t, m)
        elif kind == "pow_int":
            r = go(node.children[0]) ** int(node.value)
        elif kind == "neg":
            r = -go(node.children[0])
        elif kind in ("add", "sub", "mul", "div"):
            a, b = go(node.children[0]), go(node.children[1])
            r = {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__,
                 "div": a.__truediv__}[kind](b)
        else:
            r = getattr(go(node.children[0]), kind)()
        memo[key] = r
        return r

    return go(e)


def _check_box(f: VectorField, X: IntervalVector):
    if not isinstance(X, IntervalVector):
        X = IntervalVector.from_intervals(X)
    if len(X) != f.dim:
        raise ShapeError(f"box of length {len(X)} for a {f.dim}-dimensional field")
    return X


# --------------------------------------------------------------------------
# point Jacobian


def jac_point(f: VectorField, t: float, x) -> np.ndarray:
    """Jacobian of ``f`` at ``(t, x)`` by forward mode on floats."""
    x = np.asarray(x, dtype=float)
    n = f.dim
    if x.shape != (n,):
        raise ShapeError(f"state of shape {x.shape} for a {n}-dimensional field")
    rows = f.tape.rows
    val = [0.0] * len(rows)
    der: list = [None] * len(rows)
    zero = np.zeros(n)
    eye = np.eye(n)
    with np.errstate(all="ignore"):
        for i, (op, a, b, k, c) in enumerate(rows):
            if op == 1:
                val[i], der[i] = float(x[k]), eye[k]
            elif op == 0:
                val[i], der[i] = c, zero
            elif op == 2:
                val[i], der[i] = float(t), zero
            elif op == 3:
                val[i], der[i] = val[a] + val[b], der[a] + der[b]
            elif op == 4:
                val[i], der[i] = val[a] - val[b], der[a] - der[b]
            elif op == 5:
                val[i], der[i] = val[a] * val[b], der[a] * val[b] + val[a] * der[b]
            elif op == 6:
                if val[b] == 0.0:
                    raise DomainError("division by zero")
                q = val[a] / val[b]
                val[i], der[i] = q, (der[a] - q * der[b]) / val[b]
            elif op == 7:
                val[i] = float(np.float64(val[a]) ** k) if k else 1.0
                der[i] = (k * float(np.float64(val[a]) ** (k - 1))) * der[a] if k else zero
            elif op == 14:
                val[i], der[i] = -val[a], -der[a]
            elif op == 8:
                val[i], der[i] = math.sin(val[a]), math.cos(val[a]) * der[a]
            elif op == 9:
                val[i], der[i] = math.cos(val[a]), -math.sin(val[a]) * der[a]
            elif op == 10:
                val[i], der[i] = math.atan(val[a]), der[a] / (1.0 + val[a] * val[a])
            elif op == 11:
                e = float(np.exp(val[a]))
                val[i], der[i] = e, e * der[a]
            elif op == 12:
                if val[a] < 0.0:
                    raise DomainError("sqrt of a negative number")
                s = math.sqrt(val[a])
                val[i], der[i] = s, der[a] / (2.0 * s)
            elif op == 13:
                val[i], der[i] = abs(val[a]), float(np.sign(val[a])) * der[a]
            else:
                raise ValueError(f"bad opcode {op}")
    return np.array([der[s] for s in f.tape.outputs], dtype=float)


# --------------------------------------------------------------------------
# interval Jacobians


def jacM(f: VectorField, t, X: IntervalVector) -> IntervalMatrix:
    """Interval Jacobian: encloses ``Df(t', x)`` for every ``t'`` in ``t`` and ``x`` in ``X``."""
    t = Interval.coerce(t)
    X = _check_box(f, X)
    lo, hi = kernels.jacobian_box(f.tape, t.lo, t.hi, X.lo, X.hi)
    return IntervalMatrix(lo, hi)


def mjacM(f: VectorField, t, X: IntervalVector, xprime) -> IntervalMatrix:
    """Interval mixed Jacobian about ``xprime``.

    Column ``j`` encloses ``df/dx_j`` over ``X_1 x .. x X_j x {x'_{j+1}} x .. x {x'_n}``.
    """
    t = Interval.coerce(t)
    X = _check_box(f, X)
    xprime = np.asarray(xprime, dtype=float)
    if xprime.shape != (f.dim,):
        raise ShapeError(f"xprime of shape {xprime.shape} for a {f.dim}-dimensional field")
    outside = np.flatnonzero((xprime < X.lo) | (xprime > X.hi))
    if outside.size:
        raise PreconditionError(f"xprime lies outside the box in coordinates {outside.tolist()}")
    lo, hi = kernels.jacobian_box(f.tape, t.lo, t.hi, X.lo, X.hi, xprime)
    return IntervalMatrix(lo, hi)


# --------------------------------------------------------------------------
# corner sets


def corners(A: IntervalMatrix, max_nondegenerate: int = DEFAULT.max_nondegenerate,
            rel: float = DEFAULT.degenerate_rel) -> list[np.ndarray]:
    """The ``2**k`` vertex matrices of ``A`` (``k`` non-degenerate entries)."""
    deg = A.degenerate_mask(rel)
    free = [tuple(ij) for ij in np.argwhere(~deg)]
    if len(free) > max_nondegenerate:
        raise CapacityError(
            f"{len(free)} non-degenerate entries exceed the limit of {max_nondegenerate}; "
            "use a smaller box, a coarser enclosure, or raise max_nondegenerate")
    base = A.mid.copy()
    base[deg] = A.lo[deg] + 0.5 * (A.hi[deg] - A.lo[deg])
    out = []
    for choice in itertools.product((0, 1), repeat=len(free)):
        M = base.copy()
        for (i, j), c in zip(free, choice):
            M[i, j] = A.hi[i, j] if c else A.lo[i, j]
        out.append(M)
    return out


def x_degree(e: Expr) -> float:
    """Polynomial degree of ``e`` in the state variables (``inf`` if not polynomial)."""
    kind = e.kind
    if kind in ("const", "time"):
        return 0
    if kind == "var":
        return 1
    ds = [x_degree(c) for c in e.children]
    if kind in ("add", "sub"):
        return max(ds)
    if kind == "neg":
        return ds[0]
    if kind == "mul":
        return ds[0] + ds[1]
    if kind == "div":
        return ds[0] if ds[1] == 0 else math.inf
    if kind == "pow_int":
        return ds[0] * int(e.value) if ds[0] else 0
    return 0 if ds[0] == 0 else math.inf


def column_exact_applicable(f: VectorField, t, X: IntervalVector) -> bool:
    """Whether every Jacobian column is affine in ``x`` over a bounded box."""
    t = Interval.coerce(t)
    if f.time_varying and t.width > 0:
        return False
    if not (np.all(np.isfinite(X.lo)) and np.all(np.isfinite(X.hi))):
        return False
    return all(x_degree(c) <= 2 for c in f.working)


def _extreme_points(V: np.ndarray) -> np.ndarray:
    """Rows of ``V`` that are not convex combinations of the other rows."""
    from scipy.optimize import linprog

    V = np.unique(V, axis=0)
    keep = list(range(len(V)))
    for k in range(len(V)):
        others = [q for q in keep if q != k]
        if len(others) == 0:
            continue
        W = V[others]
        A_eq = np.vstack([W.T, np.ones(len(others))])
        b_eq = np.concatenate([V[k], [1.0]])
        res = linprog(np.zeros(len(others)), A_eq=A_eq, b_eq=b_eq,
                      bounds=(0, None), method="highs")
        if res.status == 0:
            keep.remove(k)
    return V[keep]


def column_corners(f: VectorField, t, X: IntervalVector, xprime=None,
                   max_nondegenerate: int = DEFAULT.max_nondegenerate) -> list[np.ndarray]:
    """Vertex matrices of the column-wise exact Jacobian image.

    For fields of degree at most two in ``x`` every column of the Jacobian is
    affine, so its image over the (mixed) box is the hull of its values at the
    box vertices.  The product of those column hulls is the convex hull of the
    product of their extreme points, which is what is returned.  With
    ``xprime`` the mixed boxes are used, otherwise the full box for every
    column.
    """
    t = Interval.coerce(t)
    X = _check_box(f, X)
    if not column_exact_applicable(f, t, X):
        raise PreconditionError("column-wise corners need a bounded box and a field of degree <= 2")
    n = f.dim
    if xprime is not None:
        xprime = np.asarray(xprime, dtype=float)
        if np.any(xprime < X.lo) or np.any(xprime > X.hi):
            raise PreconditionError("xprime lies outside the box")
    tm = t.mid
    cols = []
    for j in range(n):
        span = range(n) if xprime is None else range(j + 1)
        choices = []
        for i in range(n):
            if i in span:
                choices.append((X.lo[i],) if X.lo[i] == X.hi[i] else (X.lo[i], X.hi[i]))
            else:
                choices.append((xprime[i],))
        V = np.array([jac_point(f, tm, np.array(v))[:, j] for v in itertools.product(*choices)])
        cols.append(_extreme_points(V))
    total = math.prod(len(c) for c in cols)
    if total > 2 ** max_nondegenerate:
        raise CapacityError(f"{total} column-wise corners exceed 2**{max_nondegenerate}")
    out = []
    for pick in itertools.product(*cols):
        out.append(np.column_stack(pick))
    return out


def ldi_corners(f: VectorField, t, X: IntervalVector, xprime=None, variant: str = "mjac",
                method: str = "auto", max_nondegenerate: int = DEFAULT.max_nondegenerate):
    """Corner matrices whose hull covers the (mixed) Jacobians over ``X``.

    ``method`` is ``"box"`` (vertices of the interval matrix), ``"columns"``
    (column-wise exact, degree <= 2 only) or ``"auto"`` (columns when
    applicable).  Returns ``(corners, method_used, interval_matrix)``.
    """
    if variant not in ("mjac", "jac"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "mjac" and xprime is None:
        raise ValueError("the mixed variant needs xprime")
    A = mjacM(f, t, X, xprime) if variant == "mjac" else jacM(f, t, X)
    xp = xprime if variant == "mjac" else None
    if method == "auto":
        method = "columns" if column_exact_applicable(f, t, X) else "box"
    if method == "columns":
        return column_corners(f, t, X, xp, max_nondegenerate), "columns", A
    if method == "box":
        return corners(A, max_nondegenerate), "box", A
    raise ValueError(f"unknown corner method {method!r}")
