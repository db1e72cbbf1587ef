"""Command-line front end: ``mixedldi {mu,certify,reach,bench}``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import bench, lmi
from .autodiff import jacM, ldi_corners, mjacM
from .config import Tolerances, defaults
from .errors import CapacityError, ReachFailure
from .interval import Interval, IntervalVector
from .lognorm import mu1_interval, mu2_interval, mu_inf_interval
from .reach import Ellipsoid, ReachOptions, check_tube, reach_tube
from .vfield import load_system

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    system: str | None = None
    box: IntervalVector | None = None
    xprime: np.ndarray | None = None
    norm: str | None = None
    variant: str = "mjac"
    time: tuple[float, float] = (0.0, 0.0)
    dt: float = 2.0
    steps: int = 5
    h: float = 1e-3
    radius: float = 1.0
    center: np.ndarray | None = None
    c_range: tuple[float, float] | None = None
    tol: Tolerances = field(default_factory=defaults)
    seed: int = 0
    out: Path = Path(".")
    check: int = 0
    strict: bool = False
    cases: list = field(default_factory=list)

    def __post_init__(self):
        if self.dt <= 0 or self.h <= 0:
            raise UsageError("--dt and --h must be positive")
        if self.steps < 0:
            raise UsageError("--steps must be non-negative")
        if self.radius <= 0:
            raise UsageError("--radius must be positive")
        if self.check < 0:
            raise UsageError("--check must be non-negative")
        if self.time[0] > self.time[1]:
            raise UsageError("--time needs lo <= hi")
        if self.c_range is not None and not self.c_range[0] < self.c_range[1]:
            raise UsageError("--c-range needs lo < hi")

    def to_dict(self) -> dict:
        return lmi._plain({
            "command": self.command, "system": self.system,
            "box": None if self.box is None else [[float(a), float(b)] for a, b in
                                                  zip(self.box.lo, self.box.hi)],
            "xprime": self.xprime, "norm": self.norm, "variant": self.variant,
            "time": list(self.time), "dt": self.dt, "steps": self.steps, "h": self.h,
            "radius": self.radius, "center": self.center, "c_range": self.c_range,
            "tol_feas": self.tol.tol_feas, "seed": self.seed, "check": self.check,
            "strict": self.strict,
        })


# --------------------------------------------------------------------------
# argument parsing


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


def parse_box(text: str) -> IntervalVector:
    """``lo:hi,lo:hi,...``; a bare number gives a degenerate coordinate."""
    lo, hi = [], []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                a, b = part.split(":", 1)
                a, b = float(a), float(b)
            else:
                a = b = float(part)
        except ValueError:
            raise UsageError(f"bad box coordinate {part!r}") from None
        if a > b:
            raise UsageError(f"box coordinate {part!r} has lo > hi")
        lo.append(a)
        hi.append(b)
    if not lo:
        raise UsageError("empty box")
    return IntervalVector(lo, hi)


def _pair(text: str, what: str) -> tuple[float, float]:
    v = _floats(text)
    if len(v) == 1:
        return (v[0], v[0])
    if len(v) != 2:
        raise UsageError(f"{what} needs one or two numbers")
    return (v[0], v[1])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixedldi",
                                description="Contraction certificates and reachable tubes "
                                            "from mixed Jacobians.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, box=True):
        sp.add_argument("--system", required=True, help="system file")
        if box:
            sp.add_argument("--box", help="domain as lo:hi,lo:hi,... (use --box=...)")
            sp.add_argument("--xprime", help="reference point x1,x2,... (default: box midpoint)")
            sp.add_argument("--time", default="0", help="time interval lo,hi (default 0)")
        sp.add_argument("--variant", choices=("mjac", "jac"), default="mjac")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)

    mu = sub.add_parser("mu", help="log-norm bounds of the full and mixed Jacobians")
    common(mu)
    mu.add_argument("--norm", choices=("l1", "l2P", "linf"), default=None,
                    help="restrict to one log norm (default: all)")

    cert = sub.add_parser("certify", help="search a contraction certificate over a box")
    common(cert)
    cert.add_argument("--c-range", default="-5,0")

    rch = sub.add_parser("reach", help="ellipsoidal reachable tube")
    common(rch, box=False)
    rch.add_argument("--center", required=True, help="initial center x1,x2,... (declared order)")
    rch.add_argument("--radius", type=float, default=1.0)
    rch.add_argument("--dt", type=float, default=2.0)
    rch.add_argument("--steps", type=int, default=5)
    rch.add_argument("--h", type=float, default=1e-3)
    rch.add_argument("--c-range", default="-5,5")
    rch.add_argument("--check", type=int, default=0, help="Monte-Carlo samples for check_tube")
    rch.add_argument("--strict", action="store_true", help="disable the relaxed retry")

    bn = sub.add_parser("bench", help="re-derive the shipped examples")
    bn.add_argument("cases", nargs="*", help=f"subset of {sorted(bench.CASES)}")
    bn.add_argument("--out", default=".", help="output directory")
    return p


def config_from_args(ns) -> RunConfig:
    kw = {"command": ns.command, "out": Path(ns.out)}
    if ns.command == "bench":
        unknown = [c for c in ns.cases if c not in bench.CASES]
        if unknown:
            raise UsageError(f"unknown case(s) {unknown}; choose from {sorted(bench.CASES)}")
        return RunConfig(cases=list(ns.cases), **kw)
    kw.update(system=ns.system, variant=ns.variant, seed=ns.seed)
    if ns.command in ("mu", "certify"):
        if ns.box is None:
            raise UsageError("--box is required")
        box = parse_box(ns.box)
        kw["box"] = box
        xp = np.asarray(_floats(ns.xprime)) if ns.xprime else None
        if xp is not None and xp.shape != (len(box),):
            raise UsageError(f"--xprime has {xp.size} entries for a {len(box)}-box")
        kw["xprime"] = xp
        kw["time"] = _pair(ns.time, "--time")
    if ns.command == "mu":
        kw["norm"] = ns.norm
    if ns.command in ("certify", "reach"):
        kw["c_range"] = _pair(ns.c_range, "--c-range")
    if ns.command == "reach":
        kw.update(center=np.asarray(_floats(ns.center)), radius=ns.radius, dt=ns.dt,
                  steps=ns.steps, h=ns.h, check=ns.check, strict=ns.strict)
    return RunConfig(**kw)


# --------------------------------------------------------------------------
# commands


def _write_json(path: Path, payload: dict, timestamps: dict | None = None) -> None:
    doc = lmi._plain(payload)
    if timestamps is not None:
        doc = dict(doc, timestamps=timestamps)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _stamp(start: float) -> dict:
    return {"finished": datetime.now(timezone.utc).isoformat(),
            "wall_time": time.perf_counter() - start}


def _load(cfg: RunConfig):
    f = load_system(cfg.system)
    # the box and x' are given in declared order
    if cfg.box is not None and len(cfg.box) != f.dim:
        raise UsageError(f"--box has {len(cfg.box)} coordinates for a {f.dim}-state system")
    return f


def _working_box(f, box: IntervalVector) -> IntervalVector:
    return IntervalVector(f.to_working(box.lo), f.to_working(box.hi))


def _xprime(f, cfg: RunConfig, X: IntervalVector):
    if cfg.xprime is None:
        with np.errstate(invalid="ignore"):
            mid = X.mid
        if not np.all(np.isfinite(mid)):
            raise UsageError("--xprime is required for unbounded boxes")
        return mid
    return f.to_working(cfg.xprime)


def _safe(fn):
    try:
        v = fn()
    except CapacityError as exc:
        return None, str(exc)
    return float(v), None


def cmd_mu(cfg: RunConfig) -> tuple[int, dict]:
    f = _load(cfg)
    X = _working_box(f, cfg.box)
    xp = _xprime(f, cfg, X)
    t = Interval(*cfg.time)
    mats = {"jac": jacM(f, t, X), "mjac": mjacM(f, t, X, xp)}
    norms = [cfg.norm] if cfg.norm else ["l1", "l2P", "linf"]
    fns = {"l1": mu1_interval, "linf": mu_inf_interval, "l2P": mu2_interval}
    report = {"config": cfg.to_dict(), "bounds": {}, "notes": {}}
    for name in norms:
        row = {}
        for var, A in mats.items():
            v, note = _safe(lambda: fns[name](A))
            row[var] = v
            if note:
                report["notes"][f"{name}/{var}"] = note
        report["bounds"][name] = row
    width = max(len(n) for n in norms)
    print(f"{'norm':<{width}}  {'full Jacobian':>24}  {'mixed Jacobian':>24}")
    for name in norms:
        r = report["bounds"][name]
        cells = ["n/a" if r[v] is None else repr(r[v]) for v in ("jac", "mjac")]
        print(f"{name:<{width}}  {cells[0]:>24}  {cells[1]:>24}")
    return EXIT_OK, report


def cmd_certify(cfg: RunConfig) -> tuple[int, dict]:
    f = _load(cfg)
    X = _working_box(f, cfg.box)
    xp = _xprime(f, cfg, X)
    t = Interval(*cfg.time)
    tt = t.lo if t.lo == t.hi else t
    Ms, method, _ = ldi_corners(f, tt, X, xp, cfg.variant, "auto")
    lo, hi = cfg.c_range
    cert = lmi.search(Ms, None, lo, hi, cfg.tol)
    report = {"config": cfg.to_dict(), "corner_method": method, "certificate": cert.to_dict()}
    if cert.feasible:
        print(f"feasible: c = {cert.c!r} ({len(Ms)} corners, log det P = {cert.logdet:.6g})")
        return EXIT_OK, report
    # how far from contracting: the best rate over non-negative values
    diag = lmi.search(Ms, None, hi, max(hi + 5.0, 5.0), cfg.tol)
    report["best_rate"] = {"c": diag.c if diag.feasible else None,
                           "range": [hi, max(hi + 5.0, 5.0)], "feasible": diag.feasible}
    shown = "none found" if not diag.feasible else repr(diag.c)
    print(f"infeasible on [{lo}, {hi}]; best rate above: {shown}")
    return EXIT_INFEASIBLE, report


def cmd_reach(cfg: RunConfig) -> tuple[int, dict]:
    f = load_system(cfg.system)
    c = cfg.center
    if c.shape != (f.dim,):
        raise UsageError(f"--center has {c.size} entries for a {f.dim}-state system")
    E0 = Ellipsoid(f.to_working(c), np.eye(f.dim), cfg.radius)
    opts = ReachOptions(h=cfg.h, variant=cfg.variant, c_range=cfg.c_range, strict=cfg.strict,
                        tol=cfg.tol)
    cfg.out.mkdir(parents=True, exist_ok=True)
    if cfg.steps == 0:
        report = {"config": cfg.to_dict(), "initial_only": True,
                  "segments": [{"t": 0.0, "center": E0.center, "P": E0.P.P, "r": E0.r}]}
        print("no steps requested; the tube is the initial ellipsoid")
        return EXIT_OK, report
    try:
        tube = reach_tube(f, E0, cfg.dt, cfg.steps, opts)
    except ReachFailure as exc:
        report = {"config": cfg.to_dict(), "failure": {
            "message": str(exc), "step": exc.step, "best_c": exc.best_c,
            "residuals": exc.residuals, "diagnostics": exc.diagnostics}}
        print(f"reach failed at step {exc.step}: {exc}")
        return EXIT_INFEASIBLE, report
    tube.to_csv(cfg.out / "tube.csv")
    report = {"config": cfg.to_dict(), "tube": tube.manifest(),
              "_walls": [s.wall_time for s in tube.steps]}
    if cfg.check > 0:
        report["check"] = check_tube(f, tube, cfg.check, cfg.seed)
    cs = ", ".join(f"{s.c:.4g}" for s in tube.steps)
    print(f"tube with {len(tube.steps)} steps; rates [{cs}]"
          + (" (radius-inflated)" if tube.inflated else ""))
    if "check" in report:
        print(f"check_tube worst ratio {report['check']['worst_ratio']:.6g}")
    return EXIT_OK, report


def cmd_bench(cfg: RunConfig) -> tuple[int, dict]:
    results = bench.run_all(cfg.cases or None)
    code = EXIT_OK
    for r in results:
        tag = "ok" if r["paper_passed"] else "FAILED"
        print(f"{r['case']}: {tag}")
        for c in r["checks"]:
            print(f"  [{c['tag']}] {'pass' if c['passed'] else 'FAIL'}  {c['name']}")
        if not r["paper_passed"]:
            code = EXIT_ERROR
    return code, {"cases": results}


COMMANDS = {"mu": cmd_mu, "certify": cmd_certify, "reach": cmd_reach, "bench": cmd_bench}
OUTPUT = {"mu": "mu.json", "certify": "certificate.json", "reach": "manifest.json",
          "bench": "bench.json"}


def run(cfg: RunConfig) -> int:
    start = time.perf_counter()
    code, report = COMMANDS[cfg.command](cfg)
    stamps = _stamp(start)
    if "_walls" in report:
        stamps["step_wall_times"] = report.pop("_walls")
    _write_json(cfg.out / OUTPUT[cfg.command], report, stamps)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_ERROR
    try:
        cfg = config_from_args(ns)
        return run(cfg)
    except UsageError as exc:
        print(f"mixedldi: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"mixedldi: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
