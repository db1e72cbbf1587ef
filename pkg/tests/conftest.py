import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mixedldi import bench  # noqa: E402
from mixedldi.vfield import parse_system  # noqa: E402


def random_poly_text(rng, n, max_degree=3, terms=4):
    names = [f"x{i + 1}" for i in range(n)]
    lines = ["states " + " ".join(names)]
    for i in range(n):
        monos = []
        for _ in range(rng.integers(1, terms + 1)):
            coef = round(float(rng.uniform(-2, 2)), 3)
            deg = int(rng.integers(0, max_degree + 1))
            vs = rng.integers(0, n, size=deg)
            factors = [repr(coef)] + [names[v] for v in vs]
            monos.append("*".join(factors))
        lines.append(f"d{names[i]} = " + " + ".join(monos))
    return "\n".join(lines) + "\n"


def random_poly_field(rng, n=None, max_degree=3):
    n = int(rng.integers(1, 5)) if n is None else n
    return parse_system(random_poly_text(rng, n, max_degree))


def random_box(rng, n, spread=2.0, width=1.5):
    from mixedldi.interval import IntervalVector

    c = rng.uniform(-spread, spread, n)
    w = rng.uniform(0, width, n)
    return IntervalVector(c - w / 2, c + w / 2)


def random_point_in(rng, X, k=None):
    shape = (len(X),) if k is None else (k, len(X))
    return X.lo + (X.hi - X.lo) * rng.random(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def taninv():
    return bench.load_builtin("taninv")


@pytest.fixture(scope="session")
def poly():
    return bench.load_builtin("poly")


@pytest.fixture(scope="session")
def l1demo():
    return bench.load_builtin("l1demo")


@pytest.fixture(scope="session")
def robotarm():
    return bench.load_builtin("robotarm")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[k])
