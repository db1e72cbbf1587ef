"""Numerical tolerances shared across the package.

Every tolerance that the acceptance tests pin lives here so that a single
record documents the defaults.
"""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, replace

EPS = sys.float_info.epsilon


@dataclass(frozen=True)
class Tolerances:
    # interval arithmetic
    widen: float = 4.0 * EPS
    # corner extraction
    degenerate_rel: float = 1e-12
    max_nondegenerate: int = 20
    # symmetric eigensolver
    eig_symmetry: float = 1e-10
    eig_offdiag: float = 1e-12
    eig_max_sweeps: int = 100
    # LMI certificates
    tol_feas: float = 1e-8
    tol_feas_transcribed: float = 1e-3
    bisect_tol: float = 1e-3
    eps_P: float = 1e-8
    barrier_mu0: float = 1.0
    barrier_factor: float = 0.2
    barrier_mu_min: float = 1e-9
    armijo: float = 1e-4
    newton_max_iter: int = 100
    # ellipsoid membership
    member_rel: float = 1e-9
    # reachability
    c_range: tuple[float, float] = (-5.0, 5.0)
    relax_factor: float = 10.0

    def with_env(self) -> "Tolerances":
        """Apply the ``MIXEDLDI_TOL_FEAS`` override if it is set."""
        raw = os.environ.get("MIXEDLDI_TOL_FEAS")
        if raw is None or raw.strip() == "":
            return self
        value = float(raw)
        if not value > 0:
            raise ValueError(f"MIXEDLDI_TOL_FEAS must be positive, got {raw!r}")
        return replace(self, tol_feas=value)


DEFAULT = Tolerances()


def defaults() -> Tolerances:
    return DEFAULT.with_env()
