"""Logarithmic norms (matrix measures) and a symmetric eigensolver."""
from __future__ import annotations

import math

import numpy as np

from .config import DEFAULT
from .errors import PreconditionError, ShapeError
from .interval import IntervalMatrix


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {A.shape}")
    return A


def _weights(w, n) -> np.ndarray:
    if w is None:
        return np.ones(n)
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ShapeError(f"weights of shape {w.shape} for an {n}x{n} matrix")
    if not np.all(w > 0):
        raise ValueError("l1 weights must be positive")
    return w


class Metric2:
    """Quadratic metric ``|x|_P = sqrt(x^T P x)`` with its Cholesky factor."""

    __slots__ = ("P", "chol")

    def __init__(self, P):
        P = _square(P)
        if not np.allclose(P, P.T, rtol=DEFAULT.eig_symmetry, atol=0.0):
            raise PreconditionError("metric matrix is not symmetric")
        P = 0.5 * (P + P.T)
        try:
            L = np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise PreconditionError("metric matrix is not positive definite") from None
        P.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "chol", L)

    def __setattr__(self, name, value):
        raise AttributeError("Metric2 is immutable")

    @classmethod
    def identity(cls, n: int) -> "Metric2":
        return cls(np.eye(n))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def norm(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sqrt(max(x @ self.P @ x, 0.0)))

    def norms(self, X) -> np.ndarray:
        """Row-wise norms of a batch ``X`` of shape ``(k, n)``."""
        X = np.asarray(X, dtype=float)
        return np.sqrt(np.maximum(np.einsum("ki,ij,kj->k", X, self.P, X), 0.0))

    def congruence(self, S) -> np.ndarray:
        """``L^{-1} S L^{-T}``, symmetrised."""
        Li = np.linalg.inv(self.chol)
        C = Li @ np.asarray(S, dtype=float) @ Li.T
        return 0.5 * (C + C.T)

    def scaled(self, alpha: float) -> "Metric2":
        return Metric2(alpha * self.P)

    def logdet(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.chol))))

    def __repr__(self):
        return f"Metric2({self.P.tolist()})"


def as_metric(P) -> Metric2:
    return P if isinstance(P, Metric2) else Metric2(P)


# --------------------------------------------------------------------------
# eigensolver


def eig_sym(S, tol: float = DEFAULT.eig_offdiag, max_sweeps: int = DEFAULT.eig_max_sweeps
            ) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    S = _square(S)
    n = S.shape[0]
    scale = np.linalg.norm(S)
    if np.any(np.abs(S - S.T) > DEFAULT.eig_symmetry * max(scale, 1e-300)):
        raise PreconditionError("matrix is not symmetric within tolerance")
    A = 0.5 * (S + S.T)
    if n == 1 or scale == 0.0:
        return np.sort(np.diag(A).copy())
    target = tol * scale
    for _ in range(max_sweeps):
        D = A - np.diag(np.diag(A))
        off = math.sqrt(float(np.sum(D * D)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    # theta = diff / (2 apq) or its square would overflow; t ~ 1 / (2 theta)
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A).copy())


def lambda_max(S) -> float:
    return float(eig_sym(S)[-1])


# --------------------------------------------------------------------------
# log norms of real matrices


def mu1(A, w=None) -> float:
    """Weighted l1 log norm: ``max_j A_jj + sum_{i != j} (w_i / w_j) |A_ij|``."""
    A = _square(A)
    n = A.shape[0]
    w = _weights(w, n)
    W = np.abs(A) * (w[:, None] / w[None, :])
    col = W.sum(axis=0) - np.diag(W) + np.diag(A)
    return float(col.max())


def mu_inf(A) -> float:
    """Row-sum log norm: ``max_i A_ii + sum_{j != i} |A_ij|``."""
    A = _square(A)
    R = np.abs(A)
    row = R.sum(axis=1) - np.diag(R) + np.diag(A)
    return float(row.max())


def mu2(A, P=None) -> float:
    """P-weighted l2 log norm, the least ``c`` with ``A^T P + P A <= 2 c P``."""
    A = _square(A)
    n = A.shape[0]
    metric = Metric2.identity(n) if P is None else as_metric(P)
    if metric.n != n:
        raise ShapeError(f"metric of size {metric.n} for an {n}x{n} matrix")
    S = A.T @ metric.P + metric.P @ A
    return 0.5 * lambda_max(metric.congruence(S))


# --------------------------------------------------------------------------
# interval versions (suprema over all member matrices)


def _interval_square(A: IntervalMatrix) -> IntervalMatrix:
    if not isinstance(A, IntervalMatrix):
        A = IntervalMatrix.from_intervals(A)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square interval matrix, got shape {A.shape}")
    return A


def mu1_interval(A: IntervalMatrix, w=None) -> float:
    """``max_j hi(A_jj) + sum_{i != j} (w_i / w_j) mag(A_ij)``, exact over ``A``."""
    A = _interval_square(A)
    n = A.shape[0]
    w = _weights(w, n)
    with np.errstate(invalid="ignore"):
        W = A.mag * (w[:, None] / w[None, :])
    np.fill_diagonal(W, 0.0)
    col = W.sum(axis=0) + np.diag(A.hi)
    return float(col.max())


def mu_inf_interval(A: IntervalMatrix) -> float:
    A = _interval_square(A)
    R = A.mag.copy()
    np.fill_diagonal(R, 0.0)
    return float((R.sum(axis=1) + np.diag(A.hi)).max())


def mu2_interval(A: IntervalMatrix, P=None, max_nondegenerate: int = DEFAULT.max_nondegenerate
                 ) -> float:
    """Upper bound of ``mu2`` over ``A``: convexity puts the sup at a vertex."""
    from .autodiff import corners

    A = _interval_square(A)
    if not (np.all(np.isfinite(A.lo)) and np.all(np.isfinite(A.hi))):
        return math.inf
    return max(mu2(M, P) for M in corners(A, max_nondegenerate))


def mu_vertices(A: IntervalMatrix, fn) -> float:
    """Max of ``fn`` over the vertex matrices of ``A``."""
    from .autodiff import corners

    return max(fn(M) for M in corners(_interval_square(A)))


NORMS = {
    "l1": mu1,
    "linf": mu_inf,
    "l2P": mu2,
}
