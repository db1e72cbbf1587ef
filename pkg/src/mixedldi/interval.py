"""Closed intervals, interval vectors and interval matrices.

All three types are immutable.  Vectors and matrices keep their endpoints in
two read-only float64 arrays (``lo`` and ``hi``) so that they can be handed to
the evaluation kernels without conversion.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from . import _ivcore as core
from .errors import DomainError, ShapeError

__all__ = [
    "Interval",
    "IntervalVector",
    "IntervalMatrix",
    "iv_add",
    "iv_sub",
    "iv_mul",
    "iv_div",
    "iv_elem",
    "iv_hull",
    "imat_hull",
]


def _check_endpoints(lo: float, hi: float) -> None:
    if lo != lo or hi != hi:
        raise DomainError("interval endpoint is NaN")
    if lo > hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    if lo == math.inf or hi == -math.inf:
        raise DomainError(f"interval [{lo}, {hi}] has no finite member")


class Interval:
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        _check_endpoints(lo, hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    @classmethod
    def _raw(cls, pair) -> "Interval":
        iv = object.__new__(cls)
        object.__setattr__(iv, "lo", pair[0])
        object.__setattr__(iv, "hi", pair[1])
        return iv

    @staticmethod
    def coerce(x) -> "Interval":
        return x if isinstance(x, Interval) else Interval(x)

    # --- set queries -------------------------------------------------------
    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            if self.lo == -math.inf and self.hi == math.inf:
                return 0.0
            return self.lo if math.isinf(self.hi) else self.hi
        return 0.5 * (self.lo + self.hi)

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def subset(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def hull(self, other) -> "Interval":
        other = Interval.coerce(other)
        return Interval._raw(core.hull(self.lo, self.hi, other.lo, other.hi))

    # --- arithmetic --------------------------------------------------------
    def __add__(self, other):
        return iv_add(self, other)

    def __radd__(self, other):
        return iv_add(other, self)

    def __sub__(self, other):
        return iv_sub(self, other)

    def __rsub__(self, other):
        return iv_sub(other, self)

    def __mul__(self, other):
        return iv_mul(self, other)

    def __rmul__(self, other):
        return iv_mul(other, self)

    def __truediv__(self, other):
        return iv_div(self, other)

    def __rtruediv__(self, other):
        return iv_div(other, self)

    def __neg__(self):
        return Interval._raw(core.neg(self.lo, self.hi))

    def __pow__(self, k: int):
        if int(k) != k:
            raise DomainError("only integer powers are supported")
        return Interval._raw(core.powi(self.lo, self.hi, int(k)))

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _pair(x):
    if isinstance(x, Interval):
        return x.lo, x.hi
    x = float(x)
    return x, x


def iv_add(a, b) -> Interval:
    return Interval._raw(core.add(*_pair(a), *_pair(b)))


def iv_sub(a, b) -> Interval:
    return Interval._raw(core.sub(*_pair(a), *_pair(b)))


def iv_mul(a, b) -> Interval:
    return Interval._raw(core.mul(*_pair(a), *_pair(b)))


def iv_div(a, b) -> Interval:
    return Interval._raw(core.div(*_pair(a), *_pair(b)))


def iv_elem(fn: str, a, k: int | None = None) -> Interval:
    """Apply an elementary function to an interval.

    ``fn`` is one of ``sin, cos, atan, exp, sqrt, abs, neg, pow_int``; the
    integer exponent ``k`` is required for ``pow_int``.
    """
    lo, hi = _pair(a)
    if fn == "pow_int":
        if k is None:
            raise ValueError("pow_int needs an exponent")
        return Interval._raw(core.powi(lo, hi, int(k)))
    try:
        f = core.UNARY[fn]
    except KeyError:
        raise ValueError(f"unknown elementary function {fn!r}") from None
    return Interval._raw(f(lo, hi))


def iv_hull(a, b) -> Interval:
    return Interval.coerce(a).hull(b)


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class IntervalVector:
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = _frozen(lo)
        hi = lo if hi is None else _frozen(hi)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ShapeError(f"interval vector endpoints have shapes {lo.shape} and {hi.shape}")
        for l, h in zip(lo, hi):
            _check_endpoints(l, h)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("IntervalVector is immutable")

    @classmethod
    def from_intervals(cls, items: Iterable) -> "IntervalVector":
        pairs = [_pair(x) for x in items]
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @classmethod
    def from_point(cls, x) -> "IntervalVector":
        return cls(x, x)

    @classmethod
    def from_center(cls, center, radius) -> "IntervalVector":
        center = np.asarray(center, dtype=float)
        radius = np.broadcast_to(np.asarray(radius, dtype=float), center.shape)
        return cls(center - radius, center + radius)

    def __len__(self):
        return self.lo.shape[0]

    def __getitem__(self, i) -> Interval:
        return Interval._raw((float(self.lo[i]), float(self.hi[i])))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def mid(self) -> np.ndarray:
        return np.array([iv.mid for iv in self])

    def contains(self, x) -> bool:
        if isinstance(x, IntervalVector):
            return x.subset(self)
        x = np.asarray(x, dtype=float)
        if x.shape != self.lo.shape:
            raise ShapeError(f"point of shape {x.shape} vs vector of length {len(self)}")
        return bool(np.all(self.lo <= x) and np.all(x <= self.hi))

    __contains__ = contains

    def subset(self, other: "IntervalVector") -> bool:
        if len(other) != len(self):
            raise ShapeError("length mismatch")
        return bool(np.all(other.lo <= self.lo) and np.all(self.hi <= other.hi))

    def hull(self, other) -> "IntervalVector":
        if not isinstance(other, IntervalVector):
            other = IntervalVector.from_point(other)
        if len(other) != len(self):
            raise ShapeError("length mismatch")
        return IntervalVector(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def replace(self, i: int, value) -> "IntervalVector":
        lo, hi = self.lo.copy(), self.hi.copy()
        lo[i], hi[i] = _pair(value)
        return IntervalVector(lo, hi)

    def __eq__(self, other):
        if not isinstance(other, IntervalVector):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __repr__(self):
        body = ", ".join(f"[{l:.6g}, {h:.6g}]" for l, h in zip(self.lo, self.hi))
        return f"IntervalVector({body})"


class IntervalMatrix:
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = _frozen(lo)
        hi = lo if hi is None else _frozen(hi)
        if lo.ndim != 2 or lo.shape != hi.shape:
            raise ShapeError(f"interval matrix endpoints have shapes {lo.shape} and {hi.shape}")
        for l, h in zip(lo.ravel(), hi.ravel()):
            _check_endpoints(l, h)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("IntervalMatrix is immutable")

    @classmethod
    def from_point(cls, A) -> "IntervalMatrix":
        return cls(A, A)

    @classmethod
    def from_intervals(cls, rows: Sequence[Sequence]) -> "IntervalMatrix":
        pairs = [[_pair(x) for x in row] for row in rows]
        lo = [[p[0] for p in row] for row in pairs]
        hi = [[p[1] for p in row] for row in pairs]
        return cls(lo, hi)

    @property
    def shape(self):
        return self.lo.shape

    def __getitem__(self, ij) -> Interval:
        i, j = ij
        return Interval._raw((float(self.lo[i, j]), float(self.hi[i, j])))

    @property
    def mag(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, A) -> bool:
        if isinstance(A, IntervalMatrix):
            return A.subset(self)
        A = np.asarray(A, dtype=float)
        if A.shape != self.shape:
            raise ShapeError(f"matrix of shape {A.shape} vs interval matrix {self.shape}")
        return bool(np.all(self.lo <= A) and np.all(A <= self.hi))

    __contains__ = contains

    def subset(self, other: "IntervalMatrix") -> bool:
        if other.shape != self.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")
        return bool(np.all(other.lo <= self.lo) and np.all(self.hi <= other.hi))

    def hull(self, other: "IntervalMatrix") -> "IntervalMatrix":
        return imat_hull(self, other)

    def degenerate_mask(self, rel: float) -> np.ndarray:
        """Entries whose width is below ``rel * (1 + |lo|)``."""
        with np.errstate(invalid="ignore"):
            return (self.hi - self.lo) <= rel * (1.0 + np.abs(self.lo))

    def matvec(self, v) -> IntervalVector:
        """Interval enclosure of ``{A v : A in self}`` for a real vector ``v``."""
        v = np.asarray(v, dtype=float)
        m, n = self.shape
        if v.shape != (n,):
            raise ShapeError(f"vector of shape {v.shape} for a {m}x{n} matrix")
        out_lo, out_hi = [], []
        for i in range(m):
            lo, hi = 0.0, 0.0
            for j in range(n):
                plo, phi = core.mul(self.lo[i, j], self.hi[i, j], v[j], v[j])
                lo, hi = core.add(lo, hi, plo, phi)
            out_lo.append(lo)
            out_hi.append(hi)
        return IntervalVector(out_lo, out_hi)

    def __eq__(self, other):
        if not isinstance(other, IntervalMatrix):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __repr__(self):
        rows = []
        for i in range(self.shape[0]):
            rows.append(" ".join(f"[{l:.4g},{h:.4g}]" for l, h in zip(self.lo[i], self.hi[i])))
        return "IntervalMatrix(" + "; ".join(rows) + ")"


def imat_hull(A: IntervalMatrix, B: IntervalMatrix) -> IntervalMatrix:
    if A.shape != B.shape:
        raise ShapeError(f"cannot hull matrices of shapes {A.shape} and {B.shape}")
    return IntervalMatrix(np.minimum(A.lo, B.lo), np.maximum(A.hi, B.hi))
