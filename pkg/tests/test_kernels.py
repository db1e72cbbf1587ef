import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_box, random_point_in, random_poly_field
from mixedldi import kernels
from mixedldi.errors import DomainError
from mixedldi.vfield import parse_system

needs_compiled = pytest.mark.skipif("cython" not in kernels.available(),
                                    reason="compiled kernels not built")

SMOOTH = [
    "states x1 x2; dx1 = sin(x1)*x2 + exp(0.3*x2); dx2 = atan(x1 - x2) - x1^3",
    "states a b c; da = cos(a*b) + sqrt(1 + c^2); db = a/(2 + b^2); dc = exp(-a^2)*c + t",
]


def same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if a is None or b is None:
        return a is b
    a, b = np.asarray(a), np.asarray(b)
    # bitwise, so -0.0 and 0.0 differ and NaNs compare by payload
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def fields(rng):
    return [parse_system(s) for s in SMOOTH] + [random_poly_field(rng) for _ in range(40)]


def test_backend_selection():
    assert kernels.backend in kernels.available()
    assert kernels.get("python").NAME == "python"
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_pure_python_override():
    code = "from mixedldi import kernels; print(kernels.backend)"
    env = dict(os.environ, MIXEDLDI_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_backends_bitwise_equal(rng):
    py, cy = kernels.get("python"), kernels.get("cython")
    for f in fields(rng):
        n = f.dim
        X = random_box(rng, n)
        xp = random_point_in(rng, X)
        tape = f.tape
        args = (tape, 0.0, 0.5, X.lo, X.hi)
        assert same(py.interval_eval(*args), cy.interval_eval(*args))
        for j in range(n):
            assert same(py.dual_eval(*args, j), cy.dual_eval(*args, j))
        assert same(py.jacobian_box(*args), cy.jacobian_box(*args))
        assert same(py.jacobian_box(*args, xp), cy.jacobian_box(*args, xp))
        c = X.lo + 0.5 * (X.hi - X.lo)
        lo, hi = c - 0.01, c + 0.01
        assert same(py.embed_rhs(tape, 0.1, lo, hi), cy.embed_rhs(tape, 0.1, lo, hi))
        K = 20
        xps = np.tile(c, (K + 1, 1))
        for mode in (0, 1, 2):
            try:
                a = py.embed_hull(tape, 0.0, 1e-3, K, lo, hi, xps, mode)
            except Exception as exc:
                with pytest.raises(type(exc)):
                    cy.embed_hull(tape, 0.0, 1e-3, K, lo, hi, xps, mode)
                continue
            assert same(a, cy.embed_hull(tape, 0.0, 1e-3, K, lo, hi, xps, mode))


@needs_compiled
def test_backends_agree_on_unbounded_boxes():
    f = parse_system("states x1 x2; dx1 = -x1; dx2 = (-1 + x1)*x2")
    py, cy = kernels.get("python"), kernels.get("cython")
    lo, hi = np.array([-0.1, -np.inf]), np.array([np.inf, np.inf])
    assert same(py.jacobian_box(f.tape, 0.0, 0.0, lo, hi),
                cy.jacobian_box(f.tape, 0.0, 0.0, lo, hi))
    # the value (-1 + x1) * x2 meets 0 * inf on the mixed boxes: both refuse it
    for backend in (py, cy):
        with pytest.raises(DomainError):
            backend.jacobian_box(f.tape, 0.0, 0.0, lo, hi, np.zeros(2))
