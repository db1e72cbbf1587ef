# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# Compiled twin of _pykernels.py; keep the two in lockstep.
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan, exp, sqrt, pow, fabs, ceil, INFINITY

from ..errors import BlowupError, DomainError

cnp.import_array()

NAME = "cython"

cdef double W = 4.0 * 2.220446049250313e-16
cdef double PI = 3.141592653589793
cdef double TWO_PI = 2.0 * 3.141592653589793
cdef double HALF_PI = 0.5 * 3.141592653589793
cdef double CRIT_SLACK = 1e-12


cdef inline double down(double x):
    if x == INFINITY or x == -INFINITY:
        return x
    return x - W * fabs(x)


cdef inline double up(double x):
    if x == INFINITY or x == -INFINITY:
        return x
    return x + W * fabs(x)


cdef int iadd(double alo, double ahi, double blo, double bhi, double* r) except -1:
    cdef double lo = alo + blo
    cdef double hi = ahi + bhi
    if lo != lo or hi != hi:
        raise DomainError("inf - inf in interval addition")
    r[0] = down(lo)
    r[1] = up(hi)
    return 0


cdef int isub(double alo, double ahi, double blo, double bhi, double* r) except -1:
    cdef double lo = alo - bhi
    cdef double hi = ahi - blo
    if lo != lo or hi != hi:
        raise DomainError("inf - inf in interval subtraction")
    r[0] = down(lo)
    r[1] = up(hi)
    return 0


cdef int imul(double alo, double ahi, double blo, double bhi, double* r) except -1:
    cdef double p1 = alo * blo
    cdef double p2 = alo * bhi
    cdef double p3 = ahi * blo
    cdef double p4 = ahi * bhi
    if p1 != p1 or p2 != p2 or p3 != p3 or p4 != p4:
        raise DomainError("0 * inf in interval multiplication")
    cdef double lo = p1
    cdef double hi = p1
    if p2 < lo:
        lo = p2
    if p2 > hi:
        hi = p2
    if p3 < lo:
        lo = p3
    if p3 > hi:
        hi = p3
    if p4 < lo:
        lo = p4
    if p4 > hi:
        hi = p4
    r[0] = down(lo)
    r[1] = up(hi)
    return 0


cdef int idiv(double alo, double ahi, double blo, double bhi, double* r) except -1:
    if blo <= 0.0 and 0.0 <= bhi:
        raise DomainError(f"division by an interval containing zero [{blo}, {bhi}]")
    cdef double q1 = alo / blo
    cdef double q2 = alo / bhi
    cdef double q3 = ahi / blo
    cdef double q4 = ahi / bhi
    if q1 != q1 or q2 != q2 or q3 != q3 or q4 != q4:
        raise DomainError("inf / inf in interval division")
    cdef double lo = q1
    cdef double hi = q1
    if q2 < lo:
        lo = q2
    if q2 > hi:
        hi = q2
    if q3 < lo:
        lo = q3
    if q3 > hi:
        hi = q3
    if q4 < lo:
        lo = q4
    if q4 > hi:
        hi = q4
    r[0] = down(lo)
    r[1] = up(hi)
    return 0


cdef inline void iabs(double alo, double ahi, double* r):
    if alo >= 0.0:
        r[0] = alo
        r[1] = ahi
    elif ahi <= 0.0:
        r[0] = -ahi
        r[1] = -alo
    else:
        r[0] = 0.0
        r[1] = -alo if -alo > ahi else ahi


cdef int ipowi(double alo, double ahi, int k, double* r) except -1:
    cdef double plo, phi
    if k < 0:
        raise DomainError("negative integer powers are not supported")
    if k == 0:
        r[0] = 1.0
        r[1] = 1.0
        return 0
    if k == 1:
        r[0] = alo
        r[1] = ahi
        return 0
    plo = pow(alo, <double>k)
    phi = pow(ahi, <double>k)
    if k % 2 == 1 or alo >= 0.0:
        r[0] = down(plo)
        r[1] = up(phi)
    elif ahi <= 0.0:
        r[0] = down(phi)
        r[1] = up(plo)
    else:
        r[0] = 0.0
        r[1] = up(plo if plo > phi else phi)
    return 0


cdef inline bint contains_critical(double lo, double hi, double offset):
    cdef double k = ceil((lo - offset) / TWO_PI - CRIT_SLACK)
    return offset + TWO_PI * k <= hi + CRIT_SLACK * (1.0 + fabs(hi))


cdef inline void clip_unit(double* r):
    if r[0] < -1.0:
        r[0] = -1.0
    if r[1] > 1.0:
        r[1] = 1.0


cdef void isin_(double alo, double ahi, double* r):
    cdef double s1, s2
    if not (ahi - alo < TWO_PI):
        r[0] = -1.0
        r[1] = 1.0
        return
    s1 = sin(alo)
    s2 = sin(ahi)
    r[0] = down(s1 if s1 < s2 else s2)
    r[1] = up(s2 if s1 < s2 else s1)
    if contains_critical(alo, ahi, HALF_PI):
        r[1] = 1.0
    if contains_critical(alo, ahi, -HALF_PI):
        r[0] = -1.0
    clip_unit(r)


cdef void icos_(double alo, double ahi, double* r):
    cdef double c1, c2
    if not (ahi - alo < TWO_PI):
        r[0] = -1.0
        r[1] = 1.0
        return
    c1 = cos(alo)
    c2 = cos(ahi)
    r[0] = down(c1 if c1 < c2 else c2)
    r[1] = up(c2 if c1 < c2 else c1)
    if contains_critical(alo, ahi, 0.0):
        r[1] = 1.0
    if contains_critical(alo, ahi, PI):
        r[0] = -1.0
    clip_unit(r)


cdef inline void iatan_(double alo, double ahi, double* r):
    r[0] = down(atan(alo))
    r[1] = up(atan(ahi))


cdef inline void iexp_(double alo, double ahi, double* r):
    cdef double lo = down(exp(alo))
    r[0] = 0.0 if lo < 0.0 else lo
    r[1] = up(exp(ahi))


cdef int isqrt_(double alo, double ahi, double* r) except -1:
    if alo < 0.0:
        raise DomainError(f"sqrt of an interval with negative part [{alo}, {ahi}]")
    r[0] = down(sqrt(alo))
    r[1] = up(sqrt(ahi))
    return 0


cdef inline void isign(double alo, double ahi, double* r):
    if alo > 0.0:
        r[0] = 1.0
        r[1] = 1.0
    elif ahi < 0.0:
        r[0] = -1.0
        r[1] = -1.0
    else:
        r[0] = -1.0
        r[1] = 1.0


cdef class CTape:
    cdef int L
    cdef int n
    cdef int m
    cdef int[::1] ops
    cdef int[::1] a
    cdef int[::1] b
    cdef int[::1] k
    cdef double[::1] c
    cdef int[::1] out
    cdef double[::1] lo
    cdef double[::1] hi
    cdef double[::1] dlo
    cdef double[::1] dhi

    def __init__(self, tape):
        self.L = len(tape.rows)
        self.n = tape.n_vars
        self.m = tape.n_out
        self.ops = np.array(tape.ops, dtype=np.int32)
        self.a = np.array(tape.arg_a, dtype=np.int32)
        self.b = np.array(tape.arg_b, dtype=np.int32)
        self.k = np.array(tape.arg_k, dtype=np.int32)
        self.c = np.array(tape.consts, dtype=np.float64)
        self.out = np.array(tape.out_idx, dtype=np.int32)
        self.lo = np.zeros(self.L)
        self.hi = np.zeros(self.L)
        self.dlo = np.zeros(self.L)
        self.dhi = np.zeros(self.L)

    cdef int interval_pass(self, double tlo, double thi, double* xlo, double* xhi) except -1:
        cdef int i, op, a, b
        cdef double r[2]
        cdef double[::1] lo = self.lo
        cdef double[::1] hi = self.hi
        for i in range(self.L):
            op = self.ops[i]
            a = self.a[i]
            b = self.b[i]
            if op == 1:
                lo[i] = xlo[self.k[i]]
                hi[i] = xhi[self.k[i]]
                continue
            elif op == 0:
                lo[i] = self.c[i]
                hi[i] = self.c[i]
                continue
            elif op == 3:
                iadd(lo[a], hi[a], lo[b], hi[b], r)
            elif op == 5:
                imul(lo[a], hi[a], lo[b], hi[b], r)
            elif op == 4:
                isub(lo[a], hi[a], lo[b], hi[b], r)
            elif op == 6:
                idiv(lo[a], hi[a], lo[b], hi[b], r)
            elif op == 7:
                ipowi(lo[a], hi[a], self.k[i], r)
            elif op == 14:
                r[0] = -hi[a]
                r[1] = -lo[a]
            elif op == 2:
                r[0] = tlo
                r[1] = thi
            elif op == 8:
                isin_(lo[a], hi[a], r)
            elif op == 9:
                icos_(lo[a], hi[a], r)
            elif op == 10:
                iatan_(lo[a], hi[a], r)
            elif op == 11:
                iexp_(lo[a], hi[a], r)
            elif op == 12:
                isqrt_(lo[a], hi[a], r)
            elif op == 13:
                iabs(lo[a], hi[a], r)
            else:
                raise ValueError(f"bad opcode {op}")
            lo[i] = r[0]
            hi[i] = r[1]
        return 0

    cdef int dual_pass(self, double tlo, double thi, double* xlo, double* xhi, int seed) except -1:
        cdef int i, op, a, b, k
        cdef double r[2]
        cdef double g[2]
        cdef double p1[2]
        cdef double p2[2]
        cdef double alo, ahi
        cdef bint zero
        cdef double[::1] lo = self.lo
        cdef double[::1] hi = self.hi
        cdef double[::1] dlo = self.dlo
        cdef double[::1] dhi = self.dhi
        for i in range(self.L):
            op = self.ops[i]
            a = self.a[i]
            b = self.b[i]
            k = self.k[i]
            dlo[i] = 0.0
            dhi[i] = 0.0
            if op == 1:
                lo[i] = xlo[k]
                hi[i] = xhi[k]
                if k == seed:
                    dlo[i] = 1.0
                    dhi[i] = 1.0
            elif op == 0:
                lo[i] = self.c[i]
                hi[i] = self.c[i]
            elif op == 2:
                lo[i] = tlo
                hi[i] = thi
            elif op == 3:
                iadd(lo[a], hi[a], lo[b], hi[b], r)
                lo[i] = r[0]
                hi[i] = r[1]
                iadd(dlo[a], dhi[a], dlo[b], dhi[b], r)
                dlo[i] = r[0]
                dhi[i] = r[1]
            elif op == 4:
                isub(lo[a], hi[a], lo[b], hi[b], r)
                lo[i] = r[0]
                hi[i] = r[1]
                isub(dlo[a], dhi[a], dlo[b], dhi[b], r)
                dlo[i] = r[0]
                dhi[i] = r[1]
            elif op == 5:
                imul(lo[a], hi[a], lo[b], hi[b], r)
                lo[i] = r[0]
                hi[i] = r[1]
                # a structurally zero partial contributes an exact zero
                if dlo[a] == 0.0 and dhi[a] == 0.0:
                    p1[0] = 0.0
                    p1[1] = 0.0
                else:
                    imul(dlo[a], dhi[a], lo[b], hi[b], p1)
                if dlo[b] == 0.0 and dhi[b] == 0.0:
                    p2[0] = 0.0
                    p2[1] = 0.0
                else:
                    imul(lo[a], hi[a], dlo[b], dhi[b], p2)
                iadd(p1[0], p1[1], p2[0], p2[1], r)
                dlo[i] = r[0]
                dhi[i] = r[1]
            elif op == 6:
                idiv(lo[a], hi[a], lo[b], hi[b], r)
                lo[i] = r[0]
                hi[i] = r[1]
                if dlo[b] == 0.0 and dhi[b] == 0.0:
                    p1[0] = 0.0
                    p1[1] = 0.0
                else:
                    imul(r[0], r[1], dlo[b], dhi[b], p1)
                isub(dlo[a], dhi[a], p1[0], p1[1], p2)
                idiv(p2[0], p2[1], lo[b], hi[b], r)
                dlo[i] = r[0]
                dhi[i] = r[1]
            elif op == 14:
                lo[i] = -hi[a]
                hi[i] = -lo[a]
                dlo[i] = -dhi[a]
                dhi[i] = -dlo[a]
            else:
                alo = lo[a]
                ahi = hi[a]
                zero = dlo[a] == 0.0 and dhi[a] == 0.0
                if op == 7:
                    ipowi(alo, ahi, k, r)
                    lo[i] = r[0]
                    hi[i] = r[1]
                    if zero or k == 0:
                        continue
                    if k == 1:
                        dlo[i] = dlo[a]
                        dhi[i] = dhi[a]
                        continue
                    ipowi(alo, ahi, k - 1, p1)
                    imul(<double>k, <double>k, p1[0], p1[1], g)
                elif op == 8:
                    isin_(alo, ahi, r)
                    lo[i] = r[0]
                    hi[i] = r[1]
                    if zero:
                        continue
                    icos_(alo, ahi, g)
                elif op == 9:
                    icos_(alo, ahi, r)
                    lo[i] = r[0]
                    hi[i] = r[1]
                    if zero:
                        continue
                    isin_(alo, ahi, p1)
                    g[0] = -p1[1]
                    g[1] = -p1[0]
                elif op == 10:
                    iatan_(alo, ahi, r)
                    lo[i] = r[0]
                    hi[i] = r[1]
                    if zero:
                        continue
                    ipowi(alo, ahi, 2, p1)
                    iadd(1.0, 1.0, p1[0], p1[1], p2)
                    idiv(dlo[a], dhi[a], p2[0], p2[1], r)
                    dlo[i] = r[0]
                    dhi[i] = r[1]
                    continue
                elif op == 11:
                    iexp_(alo, ahi, r)
                    lo[i] = r[0]
                    hi[i] = r[1]
                    if zero:
                        continue
                    g[0] = r[0]
                    g[1] = r[1]
                elif op == 12:
                    isqrt_(alo, ahi, r)
                    lo[i] = r[0]
                    hi[i] = r[1]
                    if zero:
                        continue
                    imul(2.0, 2.0, r[0], r[1], p1)
                    idiv(dlo[a], dhi[a], p1[0], p1[1], r)
                    dlo[i] = r[0]
                    dhi[i] = r[1]
                    continue
                elif op == 13:
                    iabs(alo, ahi, r)
                    lo[i] = r[0]
                    hi[i] = r[1]
                    if zero:
                        continue
                    isign(alo, ahi, g)
                else:
                    raise ValueError(f"bad opcode {op}")
                imul(g[0], g[1], dlo[a], dhi[a], r)
                dlo[i] = r[0]
                dhi[i] = r[1]
        return 0

    cdef int jacobian(self, double tlo, double thi, double* xlo, double* xhi,
                      double* xprime, double* Jlo, double* Jhi,
                      double* blo, double* bhi) except -1:
        # Jlo/Jhi are m x n row-major; blo/bhi are scratch of length n
        cdef int i, j, q
        cdef int n = self.n
        for j in range(n):
            for q in range(n):
                if xprime == NULL or q <= j:
                    blo[q] = xlo[q]
                    bhi[q] = xhi[q]
                else:
                    blo[q] = xprime[q]
                    bhi[q] = xprime[q]
            self.dual_pass(tlo, thi, blo, bhi, j)
            for i in range(self.m):
                Jlo[i * n + j] = self.dlo[self.out[i]]
                Jhi[i * n + j] = self.dhi[self.out[i]]
        return 0

    cdef int embed_rhs(self, double t, double* lo, double* hi, double* dlo, double* dhi,
                       double* face) except -1:
        cdef int i, q
        cdef int n = self.n
        for i in range(n):
            for q in range(n):
                face[q] = hi[q]
            face[i] = lo[i]
            self.interval_pass(t, t, lo, face)
            dlo[i] = self.lo[self.out[i]]
            for q in range(n):
                face[q] = lo[q]
            face[i] = hi[i]
            self.interval_pass(t, t, face, hi)
            dhi[i] = self.hi[self.out[i]]
        return 0


cdef CTape _ctape(tape):
    ct = getattr(tape, "_ctape", None)
    if ct is None:
        ct = CTape(tape)
        tape._ctape = ct
    return <CTape>ct


def interval_eval(tape, double tlo, double thi, xlo, xhi):
    cdef CTape ct = _ctape(tape)
    cdef double[::1] l = np.array(xlo, dtype=np.float64)
    cdef double[::1] h = np.array(xhi, dtype=np.float64)
    ct.interval_pass(tlo, thi, &l[0], &h[0])
    olo = np.empty(ct.m)
    ohi = np.empty(ct.m)
    cdef int i
    for i in range(ct.m):
        olo[i] = ct.lo[ct.out[i]]
        ohi[i] = ct.hi[ct.out[i]]
    return olo, ohi


def dual_eval(tape, double tlo, double thi, xlo, xhi, int seed):
    cdef CTape ct = _ctape(tape)
    cdef double[::1] l = np.array(xlo, dtype=np.float64)
    cdef double[::1] h = np.array(xhi, dtype=np.float64)
    ct.dual_pass(tlo, thi, &l[0], &h[0], seed)
    vlo = np.empty(ct.m)
    vhi = np.empty(ct.m)
    dlo = np.empty(ct.m)
    dhi = np.empty(ct.m)
    cdef int i
    for i in range(ct.m):
        vlo[i] = ct.lo[ct.out[i]]
        vhi[i] = ct.hi[ct.out[i]]
        dlo[i] = ct.dlo[ct.out[i]]
        dhi[i] = ct.dhi[ct.out[i]]
    return vlo, vhi, dlo, dhi


def jacobian_box(tape, double tlo, double thi, xlo, xhi, xprime=None):
    cdef CTape ct = _ctape(tape)
    cdef double[::1] l = np.array(xlo, dtype=np.float64)
    cdef double[::1] h = np.array(xhi, dtype=np.float64)
    cdef double[::1] xp
    cdef double* xpp = NULL
    if xprime is not None:
        xp = np.array(xprime, dtype=np.float64)
        xpp = &xp[0]
    Jlo = np.empty((ct.m, ct.n))
    Jhi = np.empty((ct.m, ct.n))
    cdef double[:, ::1] jl = Jlo
    cdef double[:, ::1] jh = Jhi
    cdef double[::1] sl = np.empty(ct.n)
    cdef double[::1] sh = np.empty(ct.n)
    ct.jacobian(tlo, thi, &l[0], &h[0], xpp, &jl[0, 0], &jh[0, 0], &sl[0], &sh[0])
    return Jlo, Jhi


def embed_rhs(tape, double t, lo, hi):
    cdef CTape ct = _ctape(tape)
    cdef double[::1] l = np.array(lo, dtype=np.float64)
    cdef double[::1] h = np.array(hi, dtype=np.float64)
    dlo = np.empty(ct.n)
    dhi = np.empty(ct.n)
    cdef double[::1] dl = dlo
    cdef double[::1] dh = dhi
    cdef double[::1] face = np.empty(ct.n)
    ct.embed_rhs(t, &l[0], &h[0], &dl[0], &dh[0], &face[0])
    return dlo, dhi


def embed_hull(tape, double t0, double h, int K, lo, hi, xprimes=None, int mode=0):
    cdef CTape ct = _ctape(tape)
    cdef int n = ct.n
    cdef int m = ct.m
    cdef int step, i, j
    cdef double t
    cdef double[::1] cl = np.array(lo, dtype=np.float64)
    cdef double[::1] ch = np.array(hi, dtype=np.float64)
    blo_arr = np.empty((K + 1, n))
    bhi_arr = np.empty((K + 1, n))
    cdef double[:, ::1] blo = blo_arr
    cdef double[:, ::1] bhi = bhi_arr
    cdef double[::1] dl = np.empty(n)
    cdef double[::1] dh = np.empty(n)
    cdef double[::1] face = np.empty(n)
    cdef double[::1] jbl = np.empty(n)
    cdef double[::1] jbh = np.empty(n)
    cdef double[::1] sl = np.empty(n)
    cdef double[::1] sh = np.empty(n)
    cdef double[::1] xpv = np.empty(n)
    cdef double[:, ::1] xps
    cdef double[:, ::1] Jl
    cdef double[:, ::1] Jh
    cdef double[:, ::1] cjl
    cdef double[:, ::1] cjh
    Jlo = Jhi = None
    if mode:
        xps = np.array(xprimes, dtype=np.float64)
        Jlo = np.full((m, n), INFINITY)
        Jhi = np.full((m, n), -INFINITY)
        Jl = Jlo
        Jh = Jhi
        cjl = np.empty((m, n))
        cjh = np.empty((m, n))
    for step in range(K + 1):
        t = t0 + step * h
        for i in range(n):
            blo[step, i] = cl[i]
            bhi[step, i] = ch[i]
        if mode:
            for i in range(n):
                xpv[i] = xps[step, i]
                jbl[i] = cl[i] if cl[i] < xpv[i] else xpv[i]
                jbh[i] = ch[i] if ch[i] > xpv[i] else xpv[i]
            ct.jacobian(t, t, &jbl[0], &jbh[0], &xpv[0] if mode == 2 else NULL,
                        &cjl[0, 0], &cjh[0, 0], &sl[0], &sh[0])
            for i in range(m):
                for j in range(n):
                    if cjl[i, j] < Jl[i, j]:
                        Jl[i, j] = cjl[i, j]
                    if cjh[i, j] > Jh[i, j]:
                        Jh[i, j] = cjh[i, j]
        if step == K:
            break
        ct.embed_rhs(t, &cl[0], &ch[0], &dl[0], &dh[0], &face[0])
        for i in range(n):
            cl[i] = cl[i] + h * dl[i]
            ch[i] = ch[i] + h * dh[i]
            if (not (cl[i] <= ch[i]) or cl[i] == INFINITY or cl[i] == -INFINITY
                    or ch[i] == INFINITY or ch[i] == -INFINITY):
                tb = t0 + (step + 1) * h
                raise BlowupError(f"embedding bound {i} crossed or diverged at t={tb:g}", tb)
    return blo_arr, bhi_arr, Jlo, Jhi
