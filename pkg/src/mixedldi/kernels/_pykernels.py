"""Pure-Python evaluation kernels (fallback backend).

Semantics are defined here; ``_ckernels.pyx`` is a line-by-line translation.
"""
from __future__ import annotations

import numpy as np

from .. import _ivcore as core
from ..errors import BlowupError, DomainError

NAME = "python"

_INF = float("inf")
_ZERO = (0.0, 0.0)


def _rows(tape):
    rows = getattr(tape, "_py_rows", None)
    if rows is None:
        rows = [(op, a, b, k, c) for (op, a, b, k, c) in tape.rows]
        tape._py_rows = rows
    return rows


def _interval_pass(rows, tlo, thi, xlo, xhi):
    L = len(rows)
    lo = [0.0] * L
    hi = [0.0] * L
    for i in range(L):
        op, a, b, k, c = rows[i]
        if op == 1:
            lo[i] = xlo[k]
            hi[i] = xhi[k]
        elif op == 0:
            lo[i] = c
            hi[i] = c
        elif op == 3:
            lo[i], hi[i] = core.add(lo[a], hi[a], lo[b], hi[b])
        elif op == 5:
            lo[i], hi[i] = core.mul(lo[a], hi[a], lo[b], hi[b])
        elif op == 4:
            lo[i], hi[i] = core.sub(lo[a], hi[a], lo[b], hi[b])
        elif op == 6:
            lo[i], hi[i] = core.div(lo[a], hi[a], lo[b], hi[b])
        elif op == 7:
            lo[i], hi[i] = core.powi(lo[a], hi[a], k)
        elif op == 14:
            lo[i] = -hi[a]
            hi[i] = -lo[a]
        elif op == 2:
            lo[i] = tlo
            hi[i] = thi
        elif op == 8:
            lo[i], hi[i] = core.isin(lo[a], hi[a])
        elif op == 9:
            lo[i], hi[i] = core.icos(lo[a], hi[a])
        elif op == 10:
            lo[i], hi[i] = core.iatan(lo[a], hi[a])
        elif op == 11:
            lo[i], hi[i] = core.iexp(lo[a], hi[a])
        elif op == 12:
            lo[i], hi[i] = core.isqrt(lo[a], hi[a])
        elif op == 13:
            lo[i], hi[i] = core.iabs(lo[a], hi[a])
        else:
            raise ValueError(f"bad opcode {op}")
    return lo, hi


def _dual_pass(rows, tlo, thi, xlo, xhi, seed):
    """Value and derivative (w.r.t. variable ``seed``) enclosures per slot."""
    L = len(rows)
    lo = [0.0] * L
    hi = [0.0] * L
    dlo = [0.0] * L
    dhi = [0.0] * L
    for i in range(L):
        op, a, b, k, c = rows[i]
        if op == 1:
            lo[i] = xlo[k]
            hi[i] = xhi[k]
            if k == seed:
                dlo[i] = 1.0
                dhi[i] = 1.0
        elif op == 0:
            lo[i] = c
            hi[i] = c
        elif op == 2:
            lo[i] = tlo
            hi[i] = thi
        elif op == 3:
            lo[i], hi[i] = core.add(lo[a], hi[a], lo[b], hi[b])
            dlo[i], dhi[i] = core.add(dlo[a], dhi[a], dlo[b], dhi[b])
        elif op == 4:
            lo[i], hi[i] = core.sub(lo[a], hi[a], lo[b], hi[b])
            dlo[i], dhi[i] = core.sub(dlo[a], dhi[a], dlo[b], dhi[b])
        elif op == 5:
            lo[i], hi[i] = core.mul(lo[a], hi[a], lo[b], hi[b])
            # a structurally zero partial contributes an exact zero, even against
            # an unbounded factor
            p1 = _ZERO if dlo[a] == 0.0 and dhi[a] == 0.0 else core.mul(dlo[a], dhi[a], lo[b], hi[b])
            p2 = _ZERO if dlo[b] == 0.0 and dhi[b] == 0.0 else core.mul(lo[a], hi[a], dlo[b], dhi[b])
            dlo[i], dhi[i] = core.add(p1[0], p1[1], p2[0], p2[1])
        elif op == 6:
            qlo, qhi = core.div(lo[a], hi[a], lo[b], hi[b])
            lo[i] = qlo
            hi[i] = qhi
            # (u' - q v') / v
            p = _ZERO if dlo[b] == 0.0 and dhi[b] == 0.0 else core.mul(qlo, qhi, dlo[b], dhi[b])
            nlo, nhi = core.sub(dlo[a], dhi[a], p[0], p[1])
            dlo[i], dhi[i] = core.div(nlo, nhi, lo[b], hi[b])
        elif op == 14:
            lo[i] = -hi[a]
            hi[i] = -lo[a]
            dlo[i] = -dhi[a]
            dhi[i] = -dlo[a]
        else:
            alo, ahi = lo[a], hi[a]
            zero = dlo[a] == 0.0 and dhi[a] == 0.0
            if op == 7:
                lo[i], hi[i] = core.powi(alo, ahi, k)
                if zero or k == 0:
                    continue
                if k == 1:
                    dlo[i] = dlo[a]
                    dhi[i] = dhi[a]
                    continue
                glo, ghi = core.powi(alo, ahi, k - 1)
                glo, ghi = core.mul(float(k), float(k), glo, ghi)
            elif op == 8:
                lo[i], hi[i] = core.isin(alo, ahi)
                if zero:
                    continue
                glo, ghi = core.icos(alo, ahi)
            elif op == 9:
                lo[i], hi[i] = core.icos(alo, ahi)
                if zero:
                    continue
                slo, shi = core.isin(alo, ahi)
                glo, ghi = -shi, -slo
            elif op == 10:
                lo[i], hi[i] = core.iatan(alo, ahi)
                if zero:
                    continue
                slo, shi = core.powi(alo, ahi, 2)
                slo, shi = core.add(1.0, 1.0, slo, shi)
                dlo[i], dhi[i] = core.div(dlo[a], dhi[a], slo, shi)
                continue
            elif op == 11:
                lo[i], hi[i] = core.iexp(alo, ahi)
                if zero:
                    continue
                glo, ghi = lo[i], hi[i]
            elif op == 12:
                lo[i], hi[i] = core.isqrt(alo, ahi)
                if zero:
                    continue
                slo, shi = core.mul(2.0, 2.0, lo[i], hi[i])
                dlo[i], dhi[i] = core.div(dlo[a], dhi[a], slo, shi)
                continue
            elif op == 13:
                lo[i], hi[i] = core.iabs(alo, ahi)
                if zero:
                    continue
                glo, ghi = core.sign(alo, ahi)
            else:
                raise ValueError(f"bad opcode {op}")
            dlo[i], dhi[i] = core.mul(glo, ghi, dlo[a], dhi[a])
    return lo, hi, dlo, dhi


def interval_eval(tape, tlo, thi, xlo, xhi):
    rows = _rows(tape)
    lo, hi = _interval_pass(rows, float(tlo), float(thi), [float(v) for v in xlo],
                            [float(v) for v in xhi])
    out = tape.outputs
    return (np.array([lo[s] for s in out]), np.array([hi[s] for s in out]))


def dual_eval(tape, tlo, thi, xlo, xhi, seed):
    rows = _rows(tape)
    lo, hi, dlo, dhi = _dual_pass(rows, float(tlo), float(thi), [float(v) for v in xlo],
                                  [float(v) for v in xhi], int(seed))
    out = tape.outputs
    return (np.array([lo[s] for s in out]), np.array([hi[s] for s in out]),
            np.array([dlo[s] for s in out]), np.array([dhi[s] for s in out]))


def _jacobian(rows, outputs, n, tlo, thi, xlo, xhi, xprime):
    m = len(outputs)
    Jlo = [[0.0] * n for _ in range(m)]
    Jhi = [[0.0] * n for _ in range(m)]
    for j in range(n):
        if xprime is None:
            blo, bhi = xlo, xhi
        else:
            blo = xlo[: j + 1] + xprime[j + 1:]
            bhi = xhi[: j + 1] + xprime[j + 1:]
        _, _, dlo, dhi = _dual_pass(rows, tlo, thi, blo, bhi, j)
        for i, s in enumerate(outputs):
            Jlo[i][j] = dlo[s]
            Jhi[i][j] = dhi[s]
    return Jlo, Jhi


def jacobian_box(tape, tlo, thi, xlo, xhi, xprime=None):
    """Interval Jacobian over the box, or the mixed one when ``xprime`` is given.

    Column ``j`` of the mixed matrix is the derivative enclosure over the box
    ``X_1 x .. x X_j x {x'_{j+1}} x .. x {x'_n}``.
    """
    rows = _rows(tape)
    xp = None if xprime is None else [float(v) for v in xprime]
    Jlo, Jhi = _jacobian(rows, tape.outputs, tape.n_vars, float(tlo), float(thi),
                         [float(v) for v in xlo], [float(v) for v in xhi], xp)
    return np.array(Jlo), np.array(Jhi)


def _embed_rhs(rows, outputs, n, t, lo, hi):
    dlo = [0.0] * n
    dhi = [0.0] * n
    for i in range(n):
        face_hi = list(hi)
        face_hi[i] = lo[i]
        olo, _ = _interval_pass(rows, t, t, lo, face_hi)
        dlo[i] = olo[outputs[i]]
        face_lo = list(lo)
        face_lo[i] = hi[i]
        _, ohi = _interval_pass(rows, t, t, face_lo, hi)
        dhi[i] = ohi[outputs[i]]
    return dlo, dhi


def embed_rhs(tape, t, lo, hi):
    rows = _rows(tape)
    dlo, dhi = _embed_rhs(rows, tape.outputs, tape.n_vars, float(t),
                          [float(v) for v in lo], [float(v) for v in hi])
    return np.array(dlo), np.array(dhi)


def embed_hull(tape, t0, h, K, lo, hi, xprimes=None, mode=0):
    """Euler-integrate the face embedding for ``K`` steps.

    ``mode`` 0 only integrates; 1 also hulls the interval Jacobian over every
    visited box; 2 hulls the mixed Jacobian about ``xprimes[k]`` instead.
    Boxes handed to the Jacobian are first hulled with ``xprimes[k]`` so the
    comparison point always lies inside.
    """
    rows = _rows(tape)
    outputs = tape.outputs
    n = tape.n_vars
    lo = [float(v) for v in lo]
    hi = [float(v) for v in hi]
    K = int(K)
    blo = np.empty((K + 1, n))
    bhi = np.empty((K + 1, n))
    Jlo = Jhi = None
    if mode:
        Jlo = [[_INF] * n for _ in range(len(outputs))]
        Jhi = [[-_INF] * n for _ in range(len(outputs))]
    for step in range(K + 1):
        t = t0 + step * h
        blo[step] = lo
        bhi[step] = hi
        if mode:
            xp = [float(v) for v in xprimes[step]]
            jlo_box = [lo[i] if lo[i] < xp[i] else xp[i] for i in range(n)]
            jhi_box = [hi[i] if hi[i] > xp[i] else xp[i] for i in range(n)]
            clo, chi = _jacobian(rows, outputs, n, t, t, jlo_box, jhi_box,
                                 xp if mode == 2 else None)
            for i in range(len(outputs)):
                for j in range(n):
                    if clo[i][j] < Jlo[i][j]:
                        Jlo[i][j] = clo[i][j]
                    if chi[i][j] > Jhi[i][j]:
                        Jhi[i][j] = chi[i][j]
        if step == K:
            break
        dlo, dhi = _embed_rhs(rows, outputs, n, t, lo, hi)
        for i in range(n):
            lo[i] = lo[i] + h * dlo[i]
            hi[i] = hi[i] + h * dhi[i]
            if not (lo[i] <= hi[i]) or lo[i] in (_INF, -_INF) or hi[i] in (_INF, -_INF):
                raise BlowupError(
                    f"embedding bound {i} crossed or diverged at t={t0 + (step + 1) * h:g}",
                    t0 + (step + 1) * h)
    if mode:
        return blo, bhi, np.array(Jlo), np.array(Jhi)
    return blo, bhi, None, None
