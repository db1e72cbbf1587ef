"""Fixed-step integration of nominal trajectories and of the interval embedding."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DivergenceError, PreconditionError, ShapeError
from .interval import IntervalVector
from .vfield import VectorField, point_pass


def _grid(t0: float, t1: float, h: float) -> tuple[int, float]:
    if not h > 0:
        raise PreconditionError(f"step must be positive, got {h}")
    if not t1 > t0:
        raise PreconditionError(f"need t1 > t0, got [{t0}, {t1}]")
    # a tiny slack so that e.g. 2 / 0.001 gives 2000 steps, not 2001
    K = max(1, math.ceil((t1 - t0) / h - 1e-9))
    return K, (t1 - t0) / K


def _rhs(f: VectorField):
    tape = f.tape
    outs = tape.outputs

    def g(t, X):
        # X has shape (n, ...) so a batch is evaluated in one pass
        vals = point_pass(tape, t, X)
        return np.stack([np.broadcast_to(vals[s], X.shape[1:]) for s in outs])

    return g


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    method: str = "rk4"
    h: float = 0.0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def at(self, t):
        """Linear interpolation between steps (scalar or array of times)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
            raise ValueError(f"time outside [{self.t0}, {self.t1}]")
        cols = [np.interp(t, self.times, self.states[:, i]) for i in range(self.states.shape[1])]
        return np.stack(cols, axis=-1)

    def to_csv(self, path, names: Sequence[str] | None = None) -> None:
        n = self.states.shape[1]
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(n)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *names])
            for t, x in zip(self.times, self.states):
                w.writerow([repr(float(t)), *(repr(float(v)) for v in x)])


def simulate(f: VectorField, x0, t0: float, t1: float, h: float) -> Trajectory:
    """Classical RK4 with a uniform step (``h`` shrunk to divide ``t1 - t0``)."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (f.dim,):
        raise ShapeError(f"initial state of shape {x0.shape} for a {f.dim}-dimensional field")
    K, hh = _grid(t0, t1, h)
    states = _rk4(f, x0[:, None], t0, hh, K)[:, :, 0]
    times = t0 + hh * np.arange(K + 1)
    return Trajectory(times, states, "rk4", hh)


def simulate_batch(f: VectorField, X0, t0: float, t1: float, h: float):
    """RK4 for a batch ``X0`` of shape ``(k, n)``; returns ``(times, states[K+1, k, n])``."""
    X0 = np.asarray(X0, dtype=float)
    if X0.ndim != 2 or X0.shape[1] != f.dim:
        raise ShapeError(f"batch of shape {X0.shape} for a {f.dim}-dimensional field")
    K, hh = _grid(t0, t1, h)
    out = _rk4(f, X0.T.copy(), t0, hh, K)
    return t0 + hh * np.arange(K + 1), np.transpose(out, (0, 2, 1))


def _rk4(f, X, t0, h, K):
    g = _rhs(f)
    out = np.empty((K + 1,) + X.shape)
    out[0] = X
    with np.errstate(all="ignore"):
        for k in range(K):
            t = t0 + k * h
            k1 = g(t, X)
            k2 = g(t + 0.5 * h, X + 0.5 * h * k1)
            k3 = g(t + 0.5 * h, X + 0.5 * h * k2)
            k4 = g(t + h, X + h * k3)
            X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(X)):
                raise DivergenceError(f"state became non-finite after t={t:g}", t)
            out[k + 1] = X
    return out


# --------------------------------------------------------------------------
# interval embedding


@dataclass(frozen=True)
class EmbeddingState:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ShapeError("lower and upper must be vectors of the same length")
        if not np.all(lo <= hi):
            raise PreconditionError("embedding state needs lower <= upper")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_box(cls, X: IntervalVector) -> "EmbeddingState":
        return cls(X.lo, X.hi)

    def box(self) -> IntervalVector:
        return IntervalVector(self.lower, self.upper)


def embed_rhs(f: VectorField, t: float, X: EmbeddingState):
    """Face-based embedding vector field ``(d lower, d upper)``."""
    return kernels.embed_rhs(f.tape, t, X.lower, X.upper)


def embed_step(f: VectorField, X: EmbeddingState, t: float, h: float) -> EmbeddingState:
    """One explicit Euler step of the embedding."""
    blo, bhi, _, _ = kernels.embed_hull(f.tape, t, h, 1, X.lower, X.upper)
    return EmbeddingState(blo[1], bhi[1])


def embed_integrate(f: VectorField, X0: EmbeddingState, t0: float, t1: float, h: float
                    ) -> list[tuple[float, EmbeddingState]]:
    """Euler-integrate the embedding; one entry per step including ``t0``."""
    if X0.lower.shape != (f.dim,):
        raise ShapeError(f"box of length {X0.lower.shape[0]} for a {f.dim}-dimensional field")
    K, hh = _grid(t0, t1, h)
    blo, bhi, _, _ = kernels.embed_hull(f.tape, t0, hh, K, X0.lower, X0.upper)
    return [(t0 + k * hh, EmbeddingState(blo[k], bhi[k])) for k in range(K + 1)]


def embed_with_jacobian(f: VectorField, X0: EmbeddingState, t0: float, h: float, K: int,
                        xprimes, variant: str = "mjac"):
    """Integrate ``K`` Euler steps and hull the (mixed) interval Jacobian over them.

    ``xprimes[k]`` is the nominal state at step ``k``; each box is first
    hulled with it.  Returns ``(lower[K+1, n], upper[K+1, n], Jlo, Jhi)``.
    """
    mode = {"jac": 1, "mjac": 2}[variant]
    xprimes = np.asarray(xprimes, dtype=float)
    if xprimes.shape != (K + 1, f.dim):
        raise ShapeError(f"need {K + 1} nominal states, got shape {xprimes.shape}")
    return kernels.embed_hull(f.tape, t0, h, K, X0.lower, X0.upper, xprimes, mode)


def boxes_to_csv(path, boxes: Sequence[tuple[float, EmbeddingState]]) -> None:
    n = boxes[0][1].lower.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *(f"lo{i + 1}" for i in range(n)), *(f"hi{i + 1}" for i in range(n))])
        for t, X in boxes:
            w.writerow([repr(float(t)), *(repr(float(v)) for v in X.lower),
                        *(repr(float(v)) for v in X.upper)])
