"""Simulation-guided ellipsoidal reachable tubes.

Each step of length ``dt`` bounds the states with a box, integrates the
interval embedding over the step while hulling the (mixed) interval Jacobian,
and certifies contraction of the hulled set in a metric ``P_{i+1} <= P_i``.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lmi
from .autodiff import corners as box_corners
from .config import DEFAULT, Tolerances, defaults
from .errors import BlowupError, PreconditionError, ReachFailure, ShapeError
from .interval import IntervalMatrix, IntervalVector
from .lognorm import Metric2, as_metric, eig_sym, mu2
from .ode import EmbeddingState, Trajectory, _grid, _rhs, _rk4, embed_with_jacobian
from .vfield import VectorField


@dataclass(frozen=True)
class Ellipsoid:
    """``{x : (x - center)^T P (x - center) <= r^2}``."""

    center: np.ndarray
    P: Metric2
    r: float = 1.0

    def __post_init__(self):
        c = np.array(self.center, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "P", as_metric(self.P))
        if not self.r > 0:
            raise PreconditionError(f"ellipsoid radius must be positive, got {self.r}")
        if self.P.n != c.shape[0]:
            raise ShapeError("center and shape matrix sizes differ")

    @property
    def n(self) -> int:
        return self.center.shape[0]

    def normalized(self) -> "Ellipsoid":
        """Same set with radius one."""
        return Ellipsoid(self.center, Metric2(self.P.P / self.r ** 2), 1.0)


def ellipsoid_to_box(E: Ellipsoid) -> IntervalVector:
    """Smallest box containing ``E``: ``center +- r sqrt(diag(P^-1))``."""
    half = E.r * np.sqrt(np.diag(np.linalg.inv(E.P.P)))
    return IntervalVector(E.center - half, E.center + half)


def member(E: Ellipsoid, x, rel: float = DEFAULT.member_rel) -> bool:
    d = np.asarray(x, dtype=float) - E.center
    return bool(d @ E.P.P @ d <= E.r ** 2 * (1.0 + rel))


def sample_ellipsoid(E: Ellipsoid, k: int, rng, boundary_fraction: float = 0.25) -> np.ndarray:
    """``k`` points: a fraction on the boundary, the rest uniform inside."""
    n = E.n
    if k <= 0:
        return np.empty((0, n))
    y = rng.standard_normal((k, n))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    nb = int(round(boundary_fraction * k))
    radii = np.ones(k)
    radii[nb:] = rng.random(k - nb) ** (1.0 / n)
    y *= radii[:, None]
    # x = c + r L^{-T} y maps the unit ball onto E
    Linv_T = np.linalg.inv(E.P.chol).T
    return E.center + E.r * (y @ Linv_T.T)


# --------------------------------------------------------------------------
# tubes


@dataclass
class ReachOptions:
    h: float = 1e-3
    variant: str = "mjac"
    c_range: tuple = DEFAULT.c_range
    strict: bool = False
    relax_factor: float = DEFAULT.relax_factor
    max_nondegenerate: int = DEFAULT.max_nondegenerate
    dense: int = 20
    tol: Tolerances | None = None


@dataclass
class StepRecord:
    index: int
    t_start: float
    t_end: float
    c: float
    P: Metric2
    rho: float
    corner_count: int
    nondegenerate: int
    inflated: bool
    logdet: float
    wall_time: float
    certificate: lmi.Certificate = field(repr=False, default=None)
    jac_lo: np.ndarray = field(repr=False, default=None)
    jac_hi: np.ndarray = field(repr=False, default=None)

    def radius(self, t) -> np.ndarray:
        return self.rho * np.exp(self.c * (np.asarray(t, dtype=float) - self.t_start))


@dataclass
class ReachTube:
    field_name: str
    E0: Ellipsoid
    P0: Metric2
    dt: float
    steps: list
    nominal: Trajectory
    config: dict

    @property
    def inflated(self) -> bool:
        return any(s.inflated for s in self.steps)

    @property
    def t0(self) -> float:
        return self.nominal.t0

    def step_at(self, t: float):
        """Index of the step covering ``t`` (``None`` at the initial time)."""
        if t <= self.t0 + 1e-12 * max(1.0, abs(self.t0)):
            return None
        i = int(math.ceil((t - self.t0) / self.dt - 1e-9)) - 1
        return min(max(i, 0), len(self.steps) - 1)

    def ellipsoid(self, t: float) -> Ellipsoid:
        center = self.nominal.at(t)
        i = self.step_at(t)
        if i is None:
            return Ellipsoid(center, self.P0, 1.0)
        s = self.steps[i]
        return Ellipsoid(center, s.P, float(s.radius(t)))

    def segment_times(self, per_step: int | None = None) -> np.ndarray:
        k = self.config.get("dense", 20) if per_step is None else per_step
        ts = [self.t0]
        for s in self.steps:
            ts.extend(s.t_start + (s.t_end - s.t_start) * np.arange(1, k + 1) / k)
        return np.array(ts)

    def segments(self, per_step: int | None = None) -> list:
        return [(float(t), self.ellipsoid(float(t))) for t in self.segment_times(per_step)]

    def to_csv(self, path, per_step: int | None = None) -> None:
        n = self.E0.n
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *(f"c{i + 1}" for i in range(n)),
                        *(f"P{i + 1}{j + 1}" for i in range(n) for j in range(n)), "r"])
            for t, E in self.segments(per_step):
                w.writerow([repr(t), *(repr(float(v)) for v in E.center),
                            *(repr(float(v)) for v in E.P.P.ravel()), repr(float(E.r))])

    def manifest(self) -> dict:
        return {
            "system": self.field_name,
            "config": self.config,
            "initial": {"center": self.E0.center.tolist(), "P": self.E0.P.P.tolist(),
                        "r": float(self.E0.r)},
            "inflated": self.inflated,
            "steps": [{
                "index": s.index, "t_start": s.t_start, "t_end": s.t_end, "c": s.c,
                "logdet_P": s.logdet, "rho": s.rho, "corners": s.corner_count,
                "nondegenerate_entries": s.nondegenerate, "inflated": s.inflated,
                "P": s.P.P.tolist(),
            } for s in self.steps],
        }

    def save_manifest(self, path, timestamps: dict | None = None) -> None:
        m = self.manifest()
        # wall times differ run to run; keep them apart from the reproducible part
        m["timestamps"] = dict(timestamps or {}, step_wall_times=[s.wall_time for s in self.steps])
        Path(path).write_text(json.dumps(lmi._plain(m), indent=2, sort_keys=True) + "\n")


def _relative_radius(P_old: Metric2, P_new: Metric2) -> float:
    # smallest rho with B_1^{P_old} inside B_rho^{P_new}
    lam = float(eig_sym(P_old.congruence(P_new.P))[-1])
    return math.sqrt(max(1.0, lam))


def reach_tube(f: VectorField, E0: Ellipsoid, dt: float, N: int,
               opts: ReachOptions | None = None) -> ReachTube:
    opts = ReachOptions() if opts is None else opts
    tol = defaults() if opts.tol is None else opts.tol
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    if int(N) < 1:
        raise PreconditionError(f"need at least one step, got N={N}")
    if E0.n != f.dim:
        raise ShapeError(f"{E0.n}-dimensional initial set for a {f.dim}-dimensional field")
    if opts.variant not in ("mjac", "jac"):
        raise ValueError(f"unknown variant {opts.variant!r}")
    N = int(N)
    K, hh = _grid(0.0, dt, opts.h)
    t0 = 0.0
    x0 = E0.center
    nominal_states = _rk4(f, x0[:, None].copy(), t0, hh, N * K)[:, :, 0]
    times = t0 + hh * np.arange(N * K + 1)
    nominal = Trajectory(times, nominal_states, "rk4", hh)
    # fold the radius into the metric so every step starts from a unit ball
    P_i = Metric2(E0.P.P / E0.r ** 2)
    P_init = P_i
    c_lo, c_hi = opts.c_range
    steps = []
    for i in range(N):
        wall = time.perf_counter()
        ts = t0 + i * dt
        xc = nominal_states[i * K]
        half = np.sqrt(np.diag(np.linalg.inv(P_i.P)))
        X = EmbeddingState(xc - half, xc + half)
        try:
            _, _, Jlo, Jhi = embed_with_jacobian(f, X, ts, hh, K,
                                                 nominal_states[i * K:(i + 1) * K + 1],
                                                 opts.variant)
        except BlowupError as exc:
            raise ReachFailure(f"step {i}: embedding blew up: {exc}", i,
                               diagnostics={"reason": "embedding", "time": exc.time}) from exc
        A = IntervalMatrix(Jlo, Jhi)
        Ms = box_corners(A, opts.max_nondegenerate, tol.degenerate_rel)
        nondeg = int(np.sum(~A.degenerate_mask(tol.degenerate_rel)))
        cert = lmi.search(Ms, P_i, c_lo, c_hi, tol)
        inflated = False
        if not cert.feasible and not opts.strict:
            relaxed = lmi.search(Ms, P_i.scaled(opts.relax_factor), c_lo, c_hi, tol)
            if relaxed.feasible:
                cert, inflated = relaxed, True
        if not cert.feasible:
            best = max(mu2(M, cert.P) for M in Ms)
            raise ReachFailure(
                f"step {i}: no contraction certificate with rate in [{c_lo}, {c_hi}] "
                f"({len(Ms)} corners, best rate for the closest metric {best:.6g})",
                i, best_c=best, residuals=list(cert.residuals),
                diagnostics={"reason": "infeasible", "corners": len(Ms),
                             "variant": opts.variant, "certificate": cert.to_dict(),
                             "steps_done": len(steps)})
        P_next = cert.P
        rho = _relative_radius(P_i, P_next)
        steps.append(StepRecord(i, ts, ts + dt, cert.c, P_next, rho, len(Ms), nondeg,
                                inflated, P_next.logdet(), time.perf_counter() - wall,
                                cert, np.array(Jlo), np.array(Jhi)))
        # B_1 of the rescaled metric equals B_{rho e^{c dt}} of P_next
        P_i = Metric2(math.exp(-2.0 * cert.c * dt) * P_next.P / rho ** 2)
    config = {"dt": dt, "N": N, "h": hh, "variant": opts.variant, "c_range": list(opts.c_range),
              "strict": opts.strict, "relax_factor": opts.relax_factor, "dense": opts.dense,
              "tol_feas": tol.tol_feas, "bisect_tol": tol.bisect_tol}
    return ReachTube(f.name, E0, P_init, dt, steps, nominal, config)


# --------------------------------------------------------------------------
# Monte-Carlo soundness check


def check_tube(f: VectorField, tube: ReachTube, samples: int, seed=0,
               slack: float = 1e-2) -> dict:
    """Sample initial states in ``E0`` and report the worst normalised distance.

    The ratio at time ``t`` is ``|x(t) - x'(t)|_P / r(t)`` for the tube metric
    and radius active at ``t``, checked on every integration step.  Samples
    whose ratio ever exceeds ``1 + slack`` are counted as violations.
    """
    if samples <= 0:
        return {"samples": 0, "seed": seed, "worst_ratio": None, "violations": 0,
                "slack": slack, "per_step": []}
    rng = np.random.default_rng(seed)
    X0 = sample_ellipsoid(tube.E0, samples, rng)
    hh = tube.nominal.h
    K = int(round(tube.dt / hh))
    g = _rhs(f)
    nominal = tube.nominal.states
    X = X0.T.copy()
    per_sample = tube.P0.norms(X0 - nominal[0])
    worst_time = np.full(samples, tube.t0)
    per_step = []
    with np.errstate(all="ignore"):
        for s in tube.steps:
            Pm = s.P.P
            step_worst = 0.0
            for k in range(K):
                idx = s.index * K + k
                t = tube.t0 + idx * hh
                k1 = g(t, X)
                k2 = g(t + 0.5 * hh, X + 0.5 * hh * k1)
                k3 = g(t + 0.5 * hh, X + 0.5 * hh * k2)
                k4 = g(t + hh, X + hh * k3)
                X = X + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                tt = t + hh
                D = X.T - nominal[idx + 1]
                r = np.sqrt(np.maximum(np.einsum("ki,ij,kj->k", D, Pm, D), 0.0))
                r = r / float(s.radius(tt))
                r[~np.isfinite(r)] = math.inf
                worse = r > per_sample
                per_sample = np.where(worse, r, per_sample)
                worst_time = np.where(worse, tt, worst_time)
                step_worst = max(step_worst, float(r.max()))
            per_step.append(step_worst)
    j = int(np.argmax(per_sample))
    return {"samples": int(samples), "seed": seed, "worst_ratio": float(per_sample[j]),
            "worst_sample": j, "worst_time": float(worst_time[j]),
            "violations": int(np.sum(per_sample > 1.0 + slack)), "slack": slack,
            "per_step": per_step}
