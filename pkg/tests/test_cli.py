import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mixedldi import bench
from mixedldi.cli import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, main, parse_box

POLY = str(bench.system_path("poly"))
L1 = str(bench.system_path("l1demo"))


def load(path, name):
    doc = json.loads((path / name).read_text())
    assert "timestamps" in doc
    doc.pop("timestamps")
    return doc


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_box():
    X = parse_box("-1:1,0.5:2")
    assert list(X.lo) == [-1, 0.5] and list(X.hi) == [1, 2]
    X = parse_box("-0.1:inf,-inf:inf")
    assert X.hi[0] == math.inf and X.lo[1] == -math.inf
    with pytest.raises(Exception):
        parse_box("1:0")


def test_certify_quadratic(tmp_path, capsys):
    code = main(["certify", "--system", POLY, "--box=-1:1,-1:1", "--xprime", "0,0",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    doc = load(tmp_path, "certificate.json")
    assert doc["certificate"]["feasible"] and doc["certificate"]["c"] <= -0.44
    assert doc["corner_method"] == "columns"
    assert "feasible" in capsys.readouterr().out


def test_certify_full_jacobian_is_not_contracting(tmp_path):
    code = main(["certify", "--system", POLY, "--box=-1:1,-1:1", "--xprime", "0,0",
                 "--variant", "jac", "--out", str(tmp_path)])
    assert code == EXIT_INFEASIBLE
    doc = load(tmp_path, "certificate.json")
    assert doc["best_rate"]["c"] >= 0.0


def test_certify_unstable(tmp_path):
    sysf = write(tmp_path, "grow.sys", "states x\ndx = x\n")
    assert main(["certify", "--system", sysf, "--box=-1:1", "--out", str(tmp_path)]) \
        == EXIT_INFEASIBLE


def test_mu_l1_example(tmp_path):
    code = main(["mu", "--system", L1, "--box=-0.1:1e6,-1e6:1e6", "--xprime", "0,0",
                 "--norm", "l1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    row = load(tmp_path, "mu.json")["bounds"]["l1"]
    assert abs(row["mjac"] - (-0.9)) <= 1e-12 and row["jac"] >= 1e3


def test_mu_linear_columns_agree(tmp_path):
    sysf = write(tmp_path, "lin.sys", "states x y\ndx = -2*x + y\ndy = 0.5*x - 3*y\n")
    assert main(["mu", "--system", sysf, "--box=-3:1,-2:4", "--out", str(tmp_path)]) == EXIT_OK
    for name, row in load(tmp_path, "mu.json")["bounds"].items():
        assert row["jac"] == row["mjac"], name


def test_mu_degenerate_box_is_point_value(tmp_path):
    from mixedldi.autodiff import jac_point
    from mixedldi.lognorm import mu1, mu_inf
    f = bench.load_builtin("poly")
    assert main(["mu", "--system", POLY, "--box=0.3:0.3,-0.7:-0.7", "--out",
                 str(tmp_path)]) == EXIT_OK
    D = jac_point(f, 0.0, [0.3, -0.7])
    bounds = load(tmp_path, "mu.json")["bounds"]
    for name, ref in (("l1", mu1(D)), ("linf", mu_inf(D))):
        for v in ("jac", "mjac"):
            assert abs(bounds[name][v] - ref) <= 1e-12 * (1 + abs(ref))


def test_reach_linear_and_check(tmp_path):
    sysf = str(bench.system_path("linear1"))
    code = main(["reach", "--system", sysf, "--center", "1", "--radius", "0.5", "--dt", "0.5",
                 "--steps", "3", "--h", "1e-3", "--check", "50", "--out", str(tmp_path)])
    assert code == EXIT_OK
    doc = load(tmp_path, "manifest.json")
    assert all(-1.0 <= s["c"] <= -1.0 + 1e-2 for s in doc["tube"]["steps"])
    assert doc["check"]["worst_ratio"] <= 1 + 1e-4
    assert (tmp_path / "tube.csv").exists()


def test_reach_zero_steps(tmp_path):
    code = main(["reach", "--system", POLY, "--center", "0,0", "--steps", "0",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    doc = load(tmp_path, "manifest.json")
    assert doc["initial_only"] and len(doc["segments"]) == 1


def test_reach_failure_exit(tmp_path):
    sysf = write(tmp_path, "grow.sys", "states x\ndx = x\n")
    code = main(["reach", "--system", sysf, "--center", "0", "--radius", "0.1", "--dt", "0.5",
                 "--steps", "2", "--h", "1e-2", "--c-range=-5,0", "--strict",
                 "--out", str(tmp_path)])
    assert code == EXIT_INFEASIBLE
    assert load(tmp_path, "manifest.json")["failure"]["step"] == 0


def test_bench_filter_and_unknown(tmp_path, capsys):
    assert main(["bench", "taninv", "--out", str(tmp_path)]) == EXIT_OK
    doc = load(tmp_path, "bench.json")
    assert [c["case"] for c in doc["cases"]] == ["taninv"]
    assert main(["bench", "nosuchcase", "--out", str(tmp_path)]) == EXIT_ERROR
    assert "nosuchcase" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["certify", "--system", POLY, "--box=-1:1", "--out", str(tmp_path)]) \
        == EXIT_ERROR
    assert main(["certify", "--system", str(tmp_path / "missing.sys"), "--box=-1:1,-1:1",
                 "--out", str(tmp_path)]) == EXIT_ERROR
    assert main(["reach", "--system", POLY, "--center", "0,0", "--dt", "-1",
                 "--out", str(tmp_path)]) == EXIT_ERROR
    assert main(["frobnicate"]) == EXIT_ERROR


def test_outputs_byte_identical(tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["certify", "--system", POLY, "--box=-1:1,-1:1", "--xprime", "0,0",
              "--out", str(out), "--seed", "7"])
        main(["reach", "--system", str(bench.system_path("linear1")), "--center", "1",
              "--dt", "0.5", "--steps", "2", "--h", "1e-2", "--check", "20", "--seed", "7",
              "--out", str(out)])
        runs.append(out)
    for name in ("certificate.json", "manifest.json"):
        a, b = load(runs[0], name), load(runs[1], name)
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert (runs[0] / "tube.csv").read_bytes() == (runs[1] / "tube.csv").read_bytes()


def test_floats_round_trip(tmp_path):
    from mixedldi import lmi
    from mixedldi.autodiff import ldi_corners
    from mixedldi.interval import IntervalVector
    main(["certify", "--system", POLY, "--box=-1:1,-1:1", "--xprime", "0,0",
          "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "certificate.json").read_text())["certificate"]
    f = bench.load_builtin("poly")
    Ms, _, _ = ldi_corners(f, 0.0, IntervalVector([-1, -1], [1, 1]), [0.0, 0.0], "mjac", "auto")
    cert = lmi.search(Ms, None, -5.0, 0.0)
    # lossless: the written values are the computed ones bit for bit
    assert doc["c"] == cert.c and np.array_equal(np.array(doc["P"]), cert.P.P)


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mixedldi.cli", "mu", "--system", POLY,
                        "--box=-1:1,-1:1", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "mixed Jacobian" in r.stdout
