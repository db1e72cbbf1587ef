"""Scalar interval kernels on raw ``(lo, hi)`` float pairs.

Results are computed with round-to-nearest and then pushed outward by a fixed
relative factor (``4 * eps``) per rounded operation.  Negation and absolute
value are exact and are not widened.  Infinite endpoints are kept as is.

The compiled backend in ``kernels/_ckernels.pyx`` mirrors these routines
operation for operation, so both produce bitwise identical enclosures.
"""
from __future__ import annotations

import math

from .config import DEFAULT
from .errors import DomainError

INF = math.inf
W = DEFAULT.widen
PI = math.pi
TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
# slack on the period index so that a critical point sitting on an endpoint is
# never missed because of rounding in the division
_CRIT_SLACK = 1e-12


def down(x: float) -> float:
    if x == INF or x == -INF:
        return x
    return x - W * abs(x)


def up(x: float) -> float:
    if x == INF or x == -INF:
        return x
    return x + W * abs(x)


def add(alo, ahi, blo, bhi):
    lo = alo + blo
    hi = ahi + bhi
    if lo != lo or hi != hi:
        raise DomainError("inf - inf in interval addition")
    return down(lo), up(hi)


def sub(alo, ahi, blo, bhi):
    lo = alo - bhi
    hi = ahi - blo
    if lo != lo or hi != hi:
        raise DomainError("inf - inf in interval subtraction")
    return down(lo), up(hi)


def mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    if p1 != p1 or p2 != p2 or p3 != p3 or p4 != p4:
        raise DomainError("0 * inf in interval multiplication")
    lo = p1
    hi = p1
    for p in (p2, p3, p4):
        if p < lo:
            lo = p
        if p > hi:
            hi = p
    return down(lo), up(hi)


def div(alo, ahi, blo, bhi):
    if blo <= 0.0 <= bhi:
        raise DomainError(f"division by an interval containing zero [{blo}, {bhi}]")
    q1 = alo / blo
    q2 = alo / bhi
    q3 = ahi / blo
    q4 = ahi / bhi
    if q1 != q1 or q2 != q2 or q3 != q3 or q4 != q4:
        raise DomainError("inf / inf in interval division")
    lo = q1
    hi = q1
    for q in (q2, q3, q4):
        if q < lo:
            lo = q
        if q > hi:
            hi = q
    return down(lo), up(hi)


def neg(alo, ahi):
    return -ahi, -alo


def iabs(alo, ahi):
    if alo >= 0.0:
        return alo, ahi
    if ahi <= 0.0:
        return -ahi, -alo
    return 0.0, (-alo if -alo > ahi else ahi)


def powi(alo, ahi, k: int):
    if k < 0:
        raise DomainError("negative integer powers are not supported")
    if k == 0:
        return 1.0, 1.0
    if k == 1:
        return alo, ahi
    plo = _pow(alo, k)
    phi = _pow(ahi, k)
    if k % 2 == 1:
        return down(plo), up(phi)
    if alo >= 0.0:
        return down(plo), up(phi)
    if ahi <= 0.0:
        return down(phi), up(plo)
    return 0.0, up(plo if plo > phi else phi)


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def _pow(x, k):
    try:
        return math.pow(x, k)
    except OverflowError:
        return INF if (x > 0.0 or k % 2 == 0) else -INF


def _contains_critical(lo, hi, offset):
    # is offset + 2 pi k in [lo, hi] for some integer k
    k = math.ceil((lo - offset) / TWO_PI - _CRIT_SLACK)
    return offset + TWO_PI * k <= hi + _CRIT_SLACK * (1.0 + abs(hi))


def _clip_unit(lo, hi):
    return (-1.0 if lo < -1.0 else lo), (1.0 if hi > 1.0 else hi)


def isin(alo, ahi):
    if not (ahi - alo < TWO_PI):
        return -1.0, 1.0
    s1 = math.sin(alo)
    s2 = math.sin(ahi)
    lo = s1 if s1 < s2 else s2
    hi = s2 if s1 < s2 else s1
    lo = down(lo)
    hi = up(hi)
    if _contains_critical(alo, ahi, HALF_PI):
        hi = 1.0
    if _contains_critical(alo, ahi, -HALF_PI):
        lo = -1.0
    return _clip_unit(lo, hi)


def icos(alo, ahi):
    if not (ahi - alo < TWO_PI):
        return -1.0, 1.0
    c1 = math.cos(alo)
    c2 = math.cos(ahi)
    lo = c1 if c1 < c2 else c2
    hi = c2 if c1 < c2 else c1
    lo = down(lo)
    hi = up(hi)
    if _contains_critical(alo, ahi, 0.0):
        hi = 1.0
    if _contains_critical(alo, ahi, PI):
        lo = -1.0
    return _clip_unit(lo, hi)


def iatan(alo, ahi):
    return down(math.atan(alo)), up(math.atan(ahi))


def iexp(alo, ahi):
    lo = down(_exp(alo))
    return (0.0 if lo < 0.0 else lo), up(_exp(ahi))


def isqrt(alo, ahi):
    if alo < 0.0:
        raise DomainError(f"sqrt of an interval with negative part [{alo}, {ahi}]")
    return down(math.sqrt(alo)), up(math.sqrt(ahi))


def sign(alo, ahi):
    """Enclosure of the (sub)derivative of abs over [alo, ahi]."""
    if alo > 0.0:
        return 1.0, 1.0
    if ahi < 0.0:
        return -1.0, -1.0
    return -1.0, 1.0


def hull(alo, ahi, blo, bhi):
    return (alo if alo < blo else blo), (ahi if ahi > bhi else bhi)


UNARY = {
    "sin": isin,
    "cos": icos,
    "atan": iatan,
    "exp": iexp,
    "sqrt": isqrt,
    "abs": iabs,
    "neg": neg,
}
