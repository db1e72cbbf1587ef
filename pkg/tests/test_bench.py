import math

import numpy as np
import pytest

from mixedldi import bench


@pytest.mark.parametrize("name", sorted(bench.CASES))
def test_case_checks_pass(name):
    r = bench.run_case(name)
    failed = [c["name"] for c in r["checks"] if not c["passed"]]
    assert failed == []
    assert r["paper_passed"]
    assert all(c["tag"] in ("PAPER", "DERIVED", "TRIVIAL") for c in r["checks"])


def test_unknown_case():
    with pytest.raises(KeyError):
        bench.run_case("nope")


def test_builtin_systems_load():
    for name in ("taninv", "poly", "l1demo", "robotarm", "linear1"):
        f = bench.load_builtin(name)
        assert f.dim >= 1 and bench.system_path(name).exists()


def test_entrainment_degenerate_inputs():
    case = bench.case_linear(2)
    assert bench.run_entrainment(case, 0, 5.0)["worst_ratio"] == 1.0
    assert bench.run_entrainment(case, 10, 0.0)["worst_ratio"] == 1.0


def test_entrainment_linear_is_exact():
    r = bench.run_entrainment(bench.case_linear(2), 20, 2.0)
    assert r["worst_ratio"] <= 1.0 + 1e-9


def test_entrainment_deterministic():
    case = bench.case_taninv()
    a = bench.run_entrainment(case, 5, 0.5, seed=4, h=1e-2)
    b = bench.run_entrainment(case, 5, 0.5, seed=4, h=1e-2)
    assert a == b


def test_robot_fixture_metadata():
    case = bench.case_robotarm()
    assert case.metadata["dt"] == 2.0 and case.metadata["N"] == 5
    assert case.metadata["radii"] == [0.01, 0.02, 0.04]
    eq = np.array(case.expected["equilibrium"][0])
    assert np.allclose(case.field(0.0, eq), 0.0, atol=1e-12)


def test_l1_delta_parameter():
    case = bench.case_l1(0.5)
    assert case.metadata["delta"] == 0.5
    assert math.isclose(case.domain.lo[0], -0.5)
