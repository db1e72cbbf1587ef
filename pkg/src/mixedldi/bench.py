"""The shipped example systems and drivers that re-derive their claims.

Each case carries its expected constants with a tag: ``PAPER`` marks the
reference constants a case must reproduce (a failure there fails ``bench``),
``DERIVED`` ones are computed here or chosen as fixtures.  The library regenerates every matrix and rate it
checks; the expected copies are only compared against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from . import lmi
from .autodiff import column_corners, corners, jac_point, jacM, mjacM
from .interval import Interval, IntervalVector
from .lognorm import Metric2, mu1, mu1_interval, mu2, mu_inf
from .ode import EmbeddingState, _grid, _rk4, embed_with_jacobian, simulate_batch
from .vfield import VectorField, load_system, parse_system

TRUNCATE = 1e6


def system_path(name: str):
    return resources.files("mixedldi") / "data" / f"{name}.sys"


def load_builtin(name: str) -> VectorField:
    with resources.as_file(system_path(name)) as p:
        return load_system(p)


@dataclass
class Check:
    name: str
    tag: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "tag": self.tag, "passed": bool(self.passed),
                "detail": self.detail}


@dataclass
class BenchCase:
    name: str
    field: VectorField
    domain: IntervalVector
    xprime: dict
    expected: dict
    metadata: dict = field(default_factory=dict)
    checks: Callable | None = None

    def run_checks(self) -> list[Check]:
        return [] if self.checks is None else self.checks(self)


def _close(a, b, tol):
    return bool(np.all(np.abs(np.asarray(a, float) - np.asarray(b, float)) <= tol))


def _same_matrix_set(A, B, tol=1e-12) -> bool:
    A = [np.asarray(a, float) for a in A]
    B = [np.asarray(b, float) for b in B]
    if len(A) != len(B):
        return False
    used = [False] * len(B)
    for a in A:
        for k, b in enumerate(B):
            if not used[k] and _close(a, b, tol):
                used[k] = True
                break
        else:
            return False
    return True


# --------------------------------------------------------------------------
# time-varying entrainment example


def taninv_corners(f: VectorField, xprime2: float = 0.0):
    """The two corners of the mixed Jacobian over the whole plane."""
    inf = math.inf
    X = IntervalVector([-inf, -inf], [inf, inf])
    A = mjacM(f, Interval(0.0, 1.0), X, [0.0, xprime2])
    return corners(A), A


def case_taninv() -> BenchCase:
    f = load_builtin("taninv")
    h = math.pi / 2
    expected = {
        "M_plus": ([[-1.0, h], [0.0, -1.0]], "PAPER"),
        "M_minus": ([[-1.0, -h], [0.0, -1.0]], "PAPER"),
        "rate": (math.pi / 4 - 1.0, "PAPER"),
        "entry_11": ([-1.0, -1.0], "PAPER"),
        "entry_21": ([0.0, 0.0], "DERIVED"),
    }

    def checks(case):
        out = []
        Ms, A = taninv_corners(case.field)
        out.append(Check("mixed entry (1,1) is -1", "PAPER",
                         _close([A.lo[0, 0], A.hi[0, 0]], [-1, -1], 1e-12),
                         {"entry": [A.lo[0, 0], A.hi[0, 0]]}))
        out.append(Check("mixed entry (2,1) is 0", "DERIVED",
                         A.lo[1, 0] == 0.0 and A.hi[1, 0] == 0.0,
                         {"entry": [A.lo[1, 0], A.hi[1, 0]]}))
        exp = [case.expected["M_plus"][0], case.expected["M_minus"][0]]
        out.append(Check("corners are M+ and M-", "PAPER", _same_matrix_set(Ms, exp, 1e-12),
                         {"corners": [M.tolist() for M in Ms]}))
        rates = [mu2(M) for M in Ms]
        out.append(Check("mu2 of the corners with P = I is pi/4 - 1", "PAPER",
                         _close(rates, [case.expected["rate"][0]] * 2, 1e-9), {"rates": rates}))
        return out

    return BenchCase("taninv", f, IntervalVector([-5.0, -5.0], [5.0, 5.0]),
                     {"kind": "trajectory", "initial": [[a, 0.0] for a in (0, 1, -1, 2, -2)]},
                     expected, {"note": "x'_2(0) = 0 keeps x'_2 identically zero"}, checks)


# --------------------------------------------------------------------------
# quadratic example with a mixed-Jacobian certificate


P_REF = [[0.425, 0.093], [0.093, 0.985]]


def case_poly() -> BenchCase:
    f = load_builtin("poly")
    expected = {
        "corners": ([[[-3, 3], [-2, -2]], [[-3, -1], [-2, -2]],
                     [[-1, 3], [0, -2]], [[-1, -1], [0, -2]]], "PAPER"),
        "rate": (-0.45, "PAPER"),
        "P": (P_REF, "PAPER"),
        "Df_11": ([[0, 3], [0, -2]], "PAPER"),
    }

    def checks(case):
        out = []
        X = case.domain
        Ms = column_corners(case.field, 0.0, X, [0.0, 0.0])
        out.append(Check("mixed Jacobian corners are M1..M4", "PAPER",
                         _same_matrix_set(Ms, case.expected["corners"][0], 1e-12),
                         {"corners": [M.tolist() for M in Ms]}))
        D = jac_point(case.field, 0.0, [1.0, 1.0])
        out.append(Check("Df(1,1)", "PAPER", _close(D, case.expected["Df_11"][0], 1e-12),
                         {"Df": D.tolist()}))
        mus = {"l1": mu1(D), "linf": mu_inf(D), "l2": mu2(D), "l2P_ref": mu2(D, P_REF)}
        out.append(Check("mu(Df(1,1)) >= 0 for every log norm", "PAPER",
                         all(v >= 0 for v in mus.values()), mus))
        cert = lmi.verify(Ms, -0.45, P_REF, np.eye(2), 1e-3)
        out.append(Check("verify(M1..M4, -0.45, P_ref, I) at tol 1e-3", "PAPER", cert.feasible,
                         {"residuals": cert.residuals, "slack_to_P0": cert.slack_to_P0}))
        inv = ball_invariance(case, 50, horizon=5.0, seed=0)
        out.append(Check("P_ref balls inside the box are invariant and decay at -0.45", "DERIVED",
                         inv["inside"] and inv["worst_ratio"] <= 1 + 1e-3, inv))
        return out

    return BenchCase("poly", f, IntervalVector([-1.0, -1.0], [1.0, 1.0]),
                     {"kind": "point", "value": [0.0, 0.0]}, expected,
                     {"note": "dx1 includes the +x2 term implied by the printed Jacobian"}, checks)


def largest_ball_in_box(P, X: IntervalVector, center) -> float:
    """Largest ``gamma`` with ``B_gamma^P(center)`` inside ``X``."""
    half = np.sqrt(np.diag(np.linalg.inv(np.asarray(P, float))))
    room = np.minimum(np.asarray(center) - X.lo, X.hi - np.asarray(center))
    return float(np.min(room / half))


def ball_invariance(case: BenchCase, n: int, horizon: float, seed=0, rate=-0.45) -> dict:
    metric = Metric2(case.expected["P"][0])
    gamma = largest_ball_in_box(metric.P, case.domain, [0.0, 0.0])
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0, 2 * math.pi, n)
    Y = np.column_stack([np.cos(ang), np.sin(ang)])
    # rows x with L^T x = gamma y, so that |x|_P = gamma
    X0 = gamma * Y @ np.linalg.inv(metric.chol)
    times, S = simulate_batch(case.field, X0, 0.0, horizon, 1e-3)
    norms = np.stack([metric.norms(S[k]) for k in range(len(times))])
    env = np.exp(rate * times)[:, None] * norms[0][None, :]
    inside = bool(np.all(norms <= gamma * (1 + 1e-9)))
    return {"gamma": gamma, "inside": inside, "worst_ratio": float(np.max(norms / env)),
            "samples": n}


# --------------------------------------------------------------------------
# weighted l1 example


def l1_domain(delta: float) -> IntervalVector:
    return IntervalVector([-delta, -TRUNCATE], [TRUNCATE, TRUNCATE])


def case_l1(delta: float = 0.1) -> BenchCase:
    f = load_builtin("l1demo")
    expected = {
        "mixed_bound": (-1.0 + delta, "PAPER"),
        "full_bound": (math.inf, "PAPER"),
        "mu1_at_(0.5,2)": (1.0, "DERIVED"),
        "mu1_at_(0,0)": (-1.0, "DERIVED"),
    }

    def checks(case):
        X = case.domain
        out = []
        mixed = mu1_interval(mjacM(case.field, 0.0, X, [0.0, 0.0]))
        full = mu1_interval(jacM(case.field, 0.0, X))
        out.append(Check("mu1 of the mixed Jacobian is -1 + delta", "PAPER",
                         abs(mixed - case.expected["mixed_bound"][0]) <= 1e-12, {"value": mixed}))
        out.append(Check("mu1 of the full Jacobian hits the truncation cap", "PAPER",
                         full >= 1e3, {"value": full}))
        for key, x in (("mu1_at_(0.5,2)", [0.5, 2.0]), ("mu1_at_(0,0)", [0.0, 0.0])):
            v = mu1(jac_point(case.field, 0.0, x))
            out.append(Check(key, "DERIVED", abs(v - case.expected[key][0]) <= 1e-12,
                             {"value": v}))
        rep = run_entrainment(case, 50, 5.0, seed=0)
        out.append(Check("l1 decay within exp((-1 + delta) t)", "PAPER",
                         rep["worst_ratio"] <= 1 + 1e-3, rep))
        return out

    return BenchCase(f"l1demo(delta={delta})", f, l1_domain(delta),
                     {"kind": "point", "value": [0.0, 0.0]}, expected,
                     {"delta": delta, "truncated": TRUNCATE,
                      "note": "the analytic set {x1 >= -delta} is unbounded; truncated at 1e6"},
                     checks)


# --------------------------------------------------------------------------
# robot arm


# fixture chosen here; the published example takes its initial set from elsewhere.
# At rest with q inside the arm's working range; (0.5, 0.5) blows the embedding up
# for both variants from r = 0.02 on, so the fixture sits nearer the target (2, 1).
ROBOT_X0_DECLARED = (1.5, 0.5, 0.0, 0.0)  # (q1, q2, z1, z2)
ROBOT_P0 = np.eye(4)
ROBOT_DT = 2.0
ROBOT_N = 5
ROBOT_H = 1e-3
ROBOT_RADII = (0.01, 0.02, 0.04)


def case_robotarm() -> BenchCase:
    f = load_builtin("robotarm")
    x0 = f.to_working(ROBOT_X0_DECLARED)
    expected = {
        "nonconstant_entries": (6, "PAPER"),
        "corners": (64, "PAPER"),
        "equilibrium": (f.to_working([2.0, 1.0, 0.0, 0.0]).tolist(), "DERIVED"),
        "x0": (x0.tolist(), "DERIVED"),
        "P0": (ROBOT_P0.tolist(), "DERIVED"),
    }

    def checks(case):
        out = []
        g = case.field
        eq = np.array(case.expected["equilibrium"][0])
        fx = g(0.0, eq)
        out.append(Check("f vanishes at q = (2, 1), z = 0", "DERIVED", _close(fx, 0, 1e-12),
                         {"f": fx.tolist()}))
        q1 = g.names.index("q1")
        X = IntervalVector(x0 - 0.5, x0 + 0.5)
        J = jacM(g, 0.0, X)
        row = J.hi[q1] - J.lo[q1]
        out.append(Check("the dq1 row is constant", "DERIVED", bool(np.all(row == 0)),
                         {"row_width": row.tolist()}))
        for variant in ("jac", "mjac"):
            A = robot_step_hull(g, 0.01, variant)
            k = int(np.sum(~A.degenerate_mask(1e-12)))
            out.append(Check(f"{variant}: 6 non-constant entries, 64 corners", "PAPER",
                             k == 6 and len(corners(A)) == 64, {"nondegenerate": k}))
        return out

    return BenchCase("robotarm", f, IntervalVector(x0 - 0.5, x0 + 0.5),
                     {"kind": "trajectory", "initial": [x0.tolist()]}, expected,
                     {"dt": ROBOT_DT, "N": ROBOT_N, "h": ROBOT_H, "radii": list(ROBOT_RADII),
                      "order": list(f.names),
                      "note": "x'_0 and P0 are a fixture chosen here, not published values"},
                     checks)


def robot_step_hull(f: VectorField, r: float, variant: str = "mjac"):
    """Hulled (mixed) Jacobian over the first step from the fixture ball."""
    from .interval import IntervalMatrix

    x0 = f.to_working(ROBOT_X0_DECLARED)
    K, hh = _grid(0.0, ROBOT_DT, ROBOT_H)
    nom = _rk4(f, x0[:, None].copy(), 0.0, hh, K)[:, :, 0]
    half = r * np.sqrt(np.diag(np.linalg.inv(ROBOT_P0)))
    _, _, Jlo, Jhi = embed_with_jacobian(f, EmbeddingState(x0 - half, x0 + half), 0.0, hh, K,
                                         nom, variant)
    return IntervalMatrix(Jlo, Jhi)


def case_linear(n: int = 1) -> BenchCase:
    names = " ".join(f"x{i + 1}" for i in range(n))
    eqs = "\n".join(f"dx{i + 1} = -x{i + 1}" for i in range(n))
    f = parse_system(f"name linear{n}\nstates {names}\n{eqs}\n")
    return BenchCase(f"linear{n}", f, IntervalVector(-np.ones(n), np.ones(n)),
                     {"kind": "point", "value": [0.0] * n}, {"rate": (-1.0, "DERIVED")})


# --------------------------------------------------------------------------
# Monte-Carlo entrainment


def _entrainment_setup(case: BenchCase):
    name = case.name
    if name == "taninv":
        return "l2", math.pi / 4 - 1.0
    if name.startswith("l1demo"):
        return "l1", -1.0 + case.metadata["delta"]
    if name == "poly":
        return "l2P", -0.45
    if name.startswith("linear"):
        return "l2", -1.0
    raise ValueError(f"no entrainment setup for case {name!r}")


def _sample_initial(case: BenchCase, k: int, rng) -> np.ndarray:
    X = case.domain
    if case.name.startswith("l1demo"):
        # a bounded piece of the invariant half-plane
        lo = np.array([X.lo[0], -2.0])
        hi = np.array([2.0, 2.0])
        return lo + (hi - lo) * rng.random((k, 2))
    return X.lo + (X.hi - X.lo) * rng.random((k, len(X)))


def run_entrainment(case: BenchCase, n_samples: int, horizon: float, seed=0, h: float = 1e-3
                    ) -> dict:
    """Worst ``|x(t) - x'(t)| / (exp(c t) |x(0) - x'(0)|)`` over sampled trajectories."""
    norm_kind, rate = _entrainment_setup(case)
    rng = np.random.default_rng(seed)
    if case.xprime["kind"] == "point":
        starts = [np.asarray(case.xprime["value"], float)]
    else:
        starts = [np.asarray(v, float) for v in case.xprime["initial"]]
    if norm_kind == "l1":
        norm = lambda D: np.sum(np.abs(D), axis=-1)
    elif norm_kind == "l2P":
        metric = Metric2(case.expected["P"][0])
        norm = lambda D: np.sqrt(np.einsum("...i,ij,...j->...", D, metric.P, D))
    else:
        norm = lambda D: np.linalg.norm(D, axis=-1)
    worst = 1.0
    per_start = []
    if n_samples <= 0 or horizon <= 0:
        return {"samples": max(n_samples, 0), "horizon": horizon, "rate": rate,
                "norm": norm_kind, "worst_ratio": 1.0, "per_start": []}
    for xp0 in starts:
        X0 = _sample_initial(case, n_samples, rng)
        batch = np.vstack([xp0[None, :], X0])
        times, S = simulate_batch(case.field, batch, 0.0, horizon, h)
        E = S[:, 1:, :] - S[:, :1, :]
        e = norm(E)
        e0 = e[0]
        ok = e0 > 0
        ratio = e[:, ok] / (np.exp(rate * times)[:, None] * e0[None, ok])
        w = float(ratio.max()) if ratio.size else 1.0
        per_start.append({"xprime0": xp0.tolist(), "worst_ratio": w})
        worst = max(worst, w)
    return {"samples": n_samples, "horizon": horizon, "rate": rate, "norm": norm_kind,
            "worst_ratio": worst, "per_start": per_start, "seed": seed}


CASES = {
    "taninv": case_taninv,
    "poly": case_poly,
    "l1demo": case_l1,
    "robotarm": case_robotarm,
}


def run_case(name: str) -> dict:
    if name not in CASES:
        raise KeyError(name)
    case = CASES[name]()
    results = case.run_checks()
    return {"case": case.name, "checks": [c.to_dict() for c in results],
            "passed": all(c.passed for c in results),
            "paper_passed": all(c.passed for c in results if c.tag == "PAPER"),
            "metadata": case.metadata}


def run_all(names=None) -> list[dict]:
    return [run_case(n) for n in (names or list(CASES))]
