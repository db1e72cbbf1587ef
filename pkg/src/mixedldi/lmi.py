"""Contraction certificates ``(c, P)`` for finite corner sets.

A certificate asserts ``M^T P + P M <= 2 c P`` for every corner ``M`` and,
when a bound ``P0`` is given, ``P <= P0``.  :func:`verify` is the trusted
checker; :func:`search` bisects on ``c`` and maximises ``log det P`` with a
small log-barrier interior method.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import DEFAULT, Tolerances, defaults
from .errors import PreconditionError, ShapeError
from .lognorm import Metric2, as_metric, eig_sym


@dataclass
class Certificate:
    c: float
    P: Metric2
    corner_count: int
    residuals: list
    feasible: bool
    slack_to_P0: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def logdet(self) -> float:
        return self.P.logdet()

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else -math.inf

    def to_dict(self) -> dict:
        return {
            "c": float(self.c),
            "P": self.P.P.tolist(),
            "corner_count": int(self.corner_count),
            "residuals": [float(r) for r in self.residuals],
            "feasible": bool(self.feasible),
            "slack_to_P0": None if self.slack_to_P0 is None else float(self.slack_to_P0),
            "logdet": self.logdet,
            "diagnostics": _plain(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(c=float(d["c"]), P=Metric2(np.array(d["P"], dtype=float)),
                   corner_count=int(d["corner_count"]),
                   residuals=[float(r) for r in d["residuals"]], feasible=bool(d["feasible"]),
                   slack_to_P0=d.get("slack_to_P0"), diagnostics=d.get("diagnostics", {}))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Certificate":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _plain(x):
    # json-friendly copy; floats keep their shortest round-trip repr
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _check_corners(corners) -> list[np.ndarray]:
    Ms = [np.asarray(M, dtype=float) for M in corners]
    if not Ms:
        raise ShapeError("need at least one corner matrix")
    n = Ms[0].shape[0]
    for M in Ms:
        if M.shape != (n, n):
            raise ShapeError(f"corner of shape {M.shape} in a set of {n}x{n} matrices")
    return Ms


# --------------------------------------------------------------------------
# trusted checker


def residual(M, c: float, P: Metric2) -> float:
    """``lambda_max(L^{-1} (M^T P + P M - 2 c P) L^{-T})``."""
    S = M.T @ P.P + P.P @ M - 2.0 * c * P.P
    return float(eig_sym(P.congruence(S))[-1])


def verify(corners: Sequence, c: float, P, P0=None, tol_feas: float | None = None
           ) -> Certificate:
    Ms = _check_corners(corners)
    P = as_metric(P)
    n = P.n
    if Ms[0].shape[0] != n:
        raise ShapeError(f"{Ms[0].shape[0]}x{Ms[0].shape[0]} corners with a metric of size {n}")
    tol = defaults().tol_feas if tol_feas is None else tol_feas
    res = [residual(M, c, P) for M in Ms]
    slack = None
    if P0 is not None:
        P0 = as_metric(P0)
        if P0.n != n:
            raise ShapeError("P0 has the wrong size")
        slack = float(eig_sym(P0.P - P.P)[0])
    ok = all(r <= tol for r in res) and (slack is None or slack >= -tol)
    return Certificate(c=float(c), P=P, corner_count=len(Ms), residuals=res, feasible=ok,
                       slack_to_P0=slack, diagnostics={"tol_feas": tol})


def decay_bound(cert: Certificate, e0, t: float) -> float:
    """``exp(c t) |e0|_P``, the certified bound on the error at time ``t``."""
    if not cert.feasible:
        raise PreconditionError("decay_bound needs a feasible certificate")
    return math.exp(cert.c * t) * cert.P.norm(e0)


# --------------------------------------------------------------------------
# barrier machinery


def _sym_basis(n: int) -> np.ndarray:
    E = []
    for i in range(n):
        for j in range(i, n):
            B = np.zeros((n, n))
            B[i, j] = B[j, i] = 1.0
            E.append(B)
    return np.array(E)


def _from_params(p, E) -> np.ndarray:
    return np.einsum("k,kij->ij", p, E)


def _to_params(P, n) -> np.ndarray:
    return np.array([P[i, j] for i in range(n) for j in range(i, n)])


class _Group:
    """A batch of affine matrix functions ``F_b(z) = F0_b + sum_k z_k Fk_bk``."""

    def __init__(self, F0, Fk, weight_is_mu: bool):
        self.F0 = np.asarray(F0)
        self.Fk = np.asarray(Fk)
        self.weight_is_mu = weight_is_mu

    def value(self, z):
        return self.F0 + np.tensordot(self.Fk, z, axes=([1], [0]))

    def logdet(self, z):
        """Sum of log-determinants, or None when some block is not positive definite."""
        try:
            L = np.linalg.cholesky(self.value(z))
        except np.linalg.LinAlgError:
            return None
        d = np.diagonal(L, axis1=1, axis2=2)
        if np.any(d <= 0) or not np.all(np.isfinite(d)):
            return None
        return float(2.0 * np.sum(np.log(d)))

    def derivs(self, z):
        Finv = np.linalg.inv(self.value(z))
        Y = Finv[:, None] @ self.Fk
        b, m, n, _ = Y.shape
        g = np.trace(Y, axis1=2, axis2=3).sum(axis=0)
        # H_kl = sum_b tr(Y_bk Y_bl), flattened so it runs as one matrix product
        A = Y.transpose(1, 0, 2, 3).reshape(m, b * n * n)
        B = Y.transpose(1, 0, 3, 2).reshape(m, b * n * n)
        return g, A @ B.T


def _phi(z, lin, groups, mu):
    val = float(lin @ z)
    for g in groups:
        ld = g.logdet(z)
        if ld is None:
            return math.inf
        val -= (mu if g.weight_is_mu else 1.0) * ld
    return val


def _barrier(z, lin, groups, tol: Tolerances, stop=None):
    """Minimise ``lin.z - sum w_g log det F_g(z)`` along the central path.

    ``stop(z)`` may end the path early.  Returns ``(z, info)``.
    """
    mu = tol.barrier_mu0
    n_newton = 0
    stages = 0
    status = "converged"
    while mu >= tol.barrier_mu_min:
        stages += 1
        for _ in range(tol.newton_max_iter):
            grad = lin.astype(float).copy()
            hess = np.zeros((len(z), len(z)))
            for g in groups:
                w = mu if g.weight_is_mu else 1.0
                gg, hh = g.derivs(z)
                grad -= w * gg
                hess += w * hh
            try:
                dz = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            dec = float(-grad @ dz)
            if not math.isfinite(dec):
                status = "non-finite Newton step"
                return z, {"status": status, "newton": n_newton, "stages": stages, "mu": mu}
            if dec <= 1e-14 * (1.0 + abs(_phi(z, lin, groups, mu))):
                break
            f0 = _phi(z, lin, groups, mu)
            alpha = 1.0
            slope = float(grad @ dz)
            while True:
                cand = z + alpha * dz
                f1 = _phi(cand, lin, groups, mu)
                if f1 <= f0 + tol.armijo * alpha * slope:
                    break
                alpha *= 0.5
                if alpha < 1e-16:
                    break
            n_newton += 1
            if alpha < 1e-16:
                break
            z = cand
            if stop is not None and stop(z):
                return z, {"status": "stopped", "newton": n_newton, "stages": stages, "mu": mu}
        mu *= tol.barrier_factor
    return z, {"status": status, "newton": n_newton, "stages": stages, "mu": mu}


def _lmi_terms(Ms, c, E):
    # G_M(P) = 2 c P - M^T P - P M, linear in the parameters of P
    m = len(E)
    n = E.shape[1]
    Fk = np.empty((len(Ms), m, n, n))
    for b, M in enumerate(Ms):
        for k in range(m):
            Fk[b, k] = 2.0 * c * E[k] - M.T @ E[k] - E[k] @ M
    return Fk


def _phase1(Ms, c, P0m, E, tol: Tolerances, P_start):
    """Minimise ``s`` subject to ``G_M(P) + s I >= 0`` and ``eps I <= P <= P0``."""
    n = P0m.shape[0]
    m = len(E)
    Fk = _lmi_terms(Ms, c, E)
    I = np.eye(n)
    # variables z = (p, s)
    Gk = np.concatenate([Fk, np.broadcast_to(I, (len(Ms), 1, n, n))], axis=1)
    G0 = np.zeros((len(Ms), n, n))
    Ek = np.concatenate([E, np.zeros((1, n, n))], axis=0)
    lower = _Group((-tol.eps_P * I)[None], Ek[None], True)
    upper = _Group(P0m[None], -Ek[None], True)
    corners_g = _Group(G0, Gk, True)
    p = _to_params(P_start, n)
    s0 = max(float(np.linalg.eigvalsh(-np.einsum("k,kij->ij", p, Fk[b])).max())
             for b in range(len(Ms)))
    z = np.concatenate([p, [s0 + 1.0]])
    lin = np.zeros(m + 1)
    lin[-1] = 1.0

    def strictly_feasible(zz):
        return zz[-1] < 0.0

    z, info = _barrier(z, lin, [corners_g, lower, upper], tol, stop=strictly_feasible)
    return z[:m], float(z[-1]), info


def _phase2(Ms, c, P0m, E, tol: Tolerances, p_start):
    """Maximise ``log det P`` subject to ``G_M(P) >= 0`` and ``eps I <= P <= P0``."""
    n = P0m.shape[0]
    Fk = _lmi_terms(Ms, c, E)
    I = np.eye(n)
    corners_g = _Group(np.zeros((len(Ms), n, n)), Fk, True)
    lower = _Group((-tol.eps_P * I)[None], E[None], True)
    upper = _Group(P0m[None], -E[None], True)
    objective = _Group(np.zeros((1, n, n)), E[None], False)
    z, info = _barrier(p_start.copy(), np.zeros(len(E)), [objective, corners_g, lower, upper], tol)
    return z, info


def search(corners: Sequence, P0=None, c_lo: float = -5.0, c_hi: float = 5.0,
           tol: Tolerances | None = None) -> Certificate:
    """Smallest feasible rate by bisection, then the max-log-det metric at that rate.

    ``P0=None`` normalises with ``P <= I`` without treating it as a constraint
    to report.  The result is always re-checked by :func:`verify`.
    """
    tol = defaults() if tol is None else tol
    if not c_lo < c_hi:
        raise PreconditionError(f"empty rate range [{c_lo}, {c_hi}]")
    Ms = _check_corners(corners)
    n = Ms[0].shape[0]
    P0m = np.eye(n) if P0 is None else as_metric(P0).P
    E = _sym_basis(n)
    P_start = 0.5 * (P0m + tol.eps_P * np.eye(n))
    trace = []

    def feasible_at(c):
        try:
            p, s, info = _phase1(Ms, c, P0m, E, tol, P_start)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            trace.append({"c": c, "s": None, "error": str(exc)})
            return False, None, math.inf
        trace.append({"c": c, "s": s, "status": info["status"]})
        return s < 0.0, p, s

    ok, p_hi, s_hi = feasible_at(c_hi)
    if not ok:
        P_best = _from_params(p_hi, E) if p_hi is not None else P_start
        try:
            metric = Metric2(P_best)
        except PreconditionError:
            metric = Metric2(P_start)
        cert = verify(Ms, c_hi, metric, P0, tol.tol_feas)
        cert.feasible = False
        cert.diagnostics.update({"reason": "no feasible rate in range", "phase1_s": s_hi,
                                 "c_range": [c_lo, c_hi], "trace": trace,
                                 "p0_active": P0 is not None})
        return cert
    lo, hi, p_feas = c_lo, c_hi, p_hi
    ok_lo, p_lo, _ = feasible_at(c_lo)
    if ok_lo:
        hi, p_feas = c_lo, p_lo
    else:
        while hi - lo > tol.bisect_tol:
            mid = 0.5 * (lo + hi)
            ok, p_mid, _ = feasible_at(mid)
            if ok:
                hi, p_feas = mid, p_mid
            else:
                lo = mid
    c = hi
    try:
        p, info = _phase2(Ms, c, P0m, E, tol, p_feas)
        P = Metric2(_from_params(p, E))
    except (np.linalg.LinAlgError, PreconditionError) as exc:
        info = {"status": f"phase II failed: {exc}"}
        P = Metric2(_from_params(p_feas, E))
    cert = verify(Ms, c, P, P0, tol.tol_feas)
    tight = max(0.5 * r for r in cert.residuals) + c
    cert.diagnostics.update({"c_range": [c_lo, c_hi], "trace": trace, "phase2": info,
                             "c_tight": tight, "p0_active": P0 is not None})
    return cert


def search_fixed(corners: Sequence, c: float, P0=None, tol: Tolerances | None = None
                 ) -> Certificate:
    """Max-log-det metric at a given rate (no bisection)."""
    tol = defaults() if tol is None else tol
    Ms = _check_corners(corners)
    n = Ms[0].shape[0]
    P0m = np.eye(n) if P0 is None else as_metric(P0).P
    E = _sym_basis(n)
    P_start = 0.5 * (P0m + tol.eps_P * np.eye(n))
    p, s, info1 = _phase1(Ms, c, P0m, E, tol, P_start)
    if not s < 0.0:
        cert = verify(Ms, c, Metric2(_from_params(p, E)), P0, tol.tol_feas)
        cert.feasible = False
        cert.diagnostics.update({"reason": "infeasible at this rate", "phase1_s": s})
        return cert
    p, info = _phase2(Ms, c, P0m, E, tol, p)
    cert = verify(Ms, c, Metric2(_from_params(p, E)), P0, tol.tol_feas)
    cert.diagnostics.update({"phase2": info, "p0_active": P0 is not None})
    return cert
