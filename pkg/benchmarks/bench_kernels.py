"""Time the compiled and pure-Python kernels on the same workloads.

    python3 benchmarks/bench_kernels.py [--repeat N] [--json out.json]

Each workload runs on both backends; outputs are compared bit for bit
before a timing is reported.
"""
import argparse
import json
import sys
import time

import numpy as np

from mixedldi import bench, kernels
from mixedldi.ode import _grid, _rk4


def _robot_setup():
    f = bench.load_builtin("robotarm")
    x0 = f.to_working(bench.ROBOT_X0_DECLARED)
    K, hh = _grid(0.0, bench.ROBOT_DT, bench.ROBOT_H)
    nom = _rk4(f, x0[:, None].copy(), 0.0, hh, K)[:, :, 0]
    return f, x0, K, hh, nom


def workloads():
    poly = bench.load_builtin("poly")
    taninv = bench.load_builtin("taninv")
    f, x0, K, hh, nom = _robot_setup()
    lo, hi = x0 - 0.01, x0 + 0.01
    box = (np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    return {
        "interval_eval poly x1000": (1000, lambda k: k.interval_eval(poly.tape, 0.0, 0.0, *box)),
        "mixed jacobian taninv x1000": (1000, lambda k: k.jacobian_box(
            taninv.tape, 0.0, 1.0, *box, np.zeros(2))),
        "embed_rhs robot arm x1000": (1000, lambda k: k.embed_rhs(f.tape, 0.0, lo, hi)),
        "embed_hull robot arm, one 2000-step step (mjac)": (1, lambda k: k.embed_hull(
            f.tape, 0.0, hh, K, lo, hi, nom, 2)),
    }


def _flat(out):
    if isinstance(out, tuple):
        return b"".join(_flat(o) for o in out)
    return np.asarray(out).tobytes()


def run(repeat: int = 3) -> list[dict]:
    names = kernels.available()
    rows = []
    for label, (calls, fn) in workloads().items():
        row = {"workload": label}
        ref = None
        for name in names:
            k = kernels.get(name)
            out = fn(k)
            flat = _flat(out)
            if ref is None:
                ref = flat
            elif flat != ref:
                raise AssertionError(f"{label}: {name} differs from the python backend")
            best = float("inf")
            for _ in range(repeat):
                t = time.perf_counter()
                for _ in range(calls):
                    fn(k)
                best = min(best, time.perf_counter() - t)
            row[name] = best
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)
    rows = run(args.repeat)
    print(f"backends: {', '.join(kernels.available())} (default: {kernels.backend})")
    print(f"{'workload':<50} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for r in rows:
        cy = r.get("cython")
        cy_txt = "-" if cy is None else f"{cy:.4f}"
        sp_txt = "-" if cy is None else f"{r['speedup']:.1f}x"
        print(f"{r['workload']:<50} {r['python']:>10.4f} {cy_txt:>10} {sp_txt:>8}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
