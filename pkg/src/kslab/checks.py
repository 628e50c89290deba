"""Verification suite shared by ``kslab verify`` and the acceptance tests.

Every check returns a :class:`CheckResult` holding the measured value, the
tolerance it is held to and the settings used, so a report records all
grid and tolerance parameters of the run.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import blowup, specfun
from .barrier import BarrierSpec, g_bound, g_diagnostic
from .masspde import (LINEAR, SolverConfig, barrier_error, evolve, solve_linear_barrier, solve_many,
                      step, verify_comparison, verify_scaling)
from .model import ModelParams, RadialGrid, TruncationSpec, chandrasekhar_field, truncated_field
from .poisson import chandrasekhar_residual, formulation_gap, radial_equation_residual
from .profile import (extract_profile, integrating_factor, match_profile, profile_limits,
                      self_similar_fields, weighted_distance)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.4g} tol={self.tolerance:.3g} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "tolerance": float(self.tolerance), "seconds": self.seconds, "detail": self.detail}


def _order(ns, errs) -> float:
    """Least-squares slope of ``-log err`` against ``log N``."""
    return float(-np.polyfit(np.log(ns), np.log(errs), 1)[0])


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# ---------------------------------------------------------------------------
@_timed
def check_threshold(dims=range(3, 21), margin: float = 1e-6, tol: float = 1e-10,
                    time_limit: float = 5.0) -> CheckResult:
    """``C(d)`` strictly inside its bound chain with ``margin``; ``C(3)`` and ``C(100)`` anchors."""
    t0 = time.perf_counter()
    quad = specfun.QuadratureSpec(scheme=specfun.ADAPTIVE, rel_tol=tol, max_depth=30)
    rows = blowup.threshold_table(dims, quad)
    gap = min(r.min_gap() for r in rows)
    c3 = blowup.compute_threshold(3, quad).C_value
    c3_ok = 4.0 / math.pi < c3 < 2.0 * math.sqrt(2.0 / math.pi)
    u100 = blowup.upper_bound_1(100)
    elapsed = time.perf_counter() - t0
    ok = gap >= margin and all(r.chain_holds(margin) for r in rows) and c3_ok and u100 < 1.013
    ok = ok and elapsed < time_limit
    return CheckResult("threshold-bounds", ok, gap, margin,
                       {"dims": [int(d) for d in dims], "C3": c3, "upper_1_100": u100,
                        "quad_rel_tol": tol, "elapsed": elapsed,
                        "C": {str(r.d): r.C_value for r in rows}})


def prudnikov_sample(n: int = 20, seed: int = 20240611):
    """``n`` parameter tuples ``(beta, nu, p, q)`` with ``beta + nu > 0``, ``p, q > 0``."""
    rng = np.random.default_rng(seed)
    return [(float(rng.uniform(0.5, 6.0)), float(rng.uniform(0.0, 4.0)),
             float(rng.uniform(0.25, 4.0)), float(rng.uniform(0.1, 6.0))) for _ in range(n)]


def hyp1f1_sample(n: int = 200, seed: int = 7):
    """``(a, b, z)`` with ``0 < a < b <= 20`` and ``|z| <= 30``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        b = float(rng.uniform(0.05, 20.0))
        a = float(rng.uniform(0.0, 1.0)) * b
        if 0 < a < b:
            out.append((a, b, float(rng.uniform(-30.0, 30.0))))
    return out


@_timed
def check_special_functions(n: int = 20, prud_tol: float = 1e-8, f11_tol: float = 1e-9,
                            time_limit: float = 10.0) -> CheckResult:
    """Prudnikov identity on a parameter sample; integral ``1F1`` against its series."""
    t0 = time.perf_counter()
    prud = max(abs(specfun.prudnikov_lhs(*s) / specfun.prudnikov_rhs(*s) - 1.0)
               for s in prudnikov_sample(n))
    f11 = max(abs(specfun.hyp1f1(a, b, z) / specfun.hyp1f1_series(a, b, z) - 1.0)
              for a, b, z in hyp1f1_sample())
    elapsed = time.perf_counter() - t0
    ok = prud <= prud_tol and f11 <= f11_tol and elapsed < time_limit
    return CheckResult("special-functions", ok, prud, prud_tol,
                       {"prudnikov_max_rel": prud, "hyp1f1_max_rel": f11, "hyp1f1_tol": f11_tol,
                        "n_prudnikov": n, "elapsed": elapsed})


@_timed
def check_linear_oracle(params: ModelParams = ModelParams(3, 0.5), ns=(256, 512, 1024, 2048),
                        r_max: float = 40.0, stretch: float = 5.0, dt_factor: float = 0.5,
                        times=(0.5, 1.0, 2.0), window=(0.1, 5.0), tol: float = 1e-3,
                        order_range=(1.7, 2.3)) -> CheckResult:
    """Linear-drift runs against the explicit upper barrier; error and grid-convergence order."""
    spec = BarrierSpec.upper(params)
    errs = []
    for n in ns:
        grid = RadialGrid.geometric(r_max, n, stretch=stretch)
        cfg = SolverConfig(grid, max(times), dt=dt_factor / n, snapshots=tuple(times))
        rep = solve_linear_barrier(spec, cfg)
        errs.append(max(barrier_error(rep, spec, t, window) for t in times))
    order = _order(ns, errs)
    ok = errs[-1] <= tol and order_range[0] <= order <= order_range[1]
    return CheckResult("linear-oracle", ok, errs[-1], tol,
                       {"errors": dict(zip(map(str, ns), errs)), "order": order,
                        "order_range": list(order_range), "r_max": r_max, "stretch": stretch,
                        "dt": f"{dt_factor}/N", "times": list(times), "window": list(window),
                        "lambda": spec.lam})


@_timed
def check_chandrasekhar(params: ModelParams = ModelParams(3, 0.5), n: int = 2048, dt: float = 1e-4,
                        r_max: float = 10.0, step_tol: float = 1e-6, min_order: float = 1.9,
                        ns=(256, 512, 1024, 2048), window=(0.5, 5.0), exact_tol: float = 1e-8) -> CheckResult:
    """One solver step leaves ``2 sigma r^(d-2)`` fixed; the operator residual vanishes at second order.

    For ``d = 3, 4`` the three-point stencils are exact on ``r^(d-2)`` and the
    residual is rounding noise, so the order is measured at ``d = 5``
    (on a window away from the singular origin) in addition.
    """
    grid = RadialGrid.geometric(r_max, n)
    f0 = chandrasekhar_field(params, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f1 = step(f0, dt, SolverConfig(grid, dt, dt=dt, fit=0.0))
    ref = f0.values[1:]
    change = float(np.max(np.abs(f1.values[1:] - ref) / ref))
    res = [chandrasekhar_residual(params, RadialGrid.uniform(r_max, k), window) for k in ns]
    exact = params.d <= 4 and max(res) <= exact_tol
    d_order = params.d if params.d >= 5 else 5
    p5 = ModelParams(d_order, params.epsilon)
    res5 = [chandrasekhar_residual(p5, RadialGrid.uniform(r_max, k), window) for k in ns]
    order = _order(ns, res5)
    ok = change <= step_tol and order >= min_order and (exact or params.d >= 5)
    return CheckResult("chandrasekhar", ok, change, step_tol,
                       {"residuals": dict(zip(map(str, ns), res)), "exact_stencil": exact,
                        "order_dim": d_order, "order_residuals": dict(zip(map(str, ns), res5)),
                        "order": order, "min_order": min_order, "n": n, "dt": dt, "r_max": r_max,
                        "window": list(window)})


@_timed
def check_subcritical(params: ModelParams = ModelParams(3, 0.5), Ks=(0.5, 1.0, 2.0, 4.0),
                      n: int = 2048, r_max: float = 40.0, dt: float = 1e-3, t_end: float = 1.0,
                      n_snap: int = 20, tol: float = 1e-6, sandwich_tol: float = 1e-4) -> CheckResult:
    """A-priori bound, ordering in ``K`` and the barrier sandwich for ``t <= t_end``.

    The sandwich compares each run with the two linear-drift runs
    (``lam = d-1`` below, ``lam = d-1-2 eps`` above) started from the same
    truncated datum.
    """
    grid = RadialGrid.geometric(r_max, n)
    snaps = tuple(np.linspace(t_end / n_snap, t_end, n_snap))
    cfg = SolverConfig(grid, t_end, dt=dt, snapshots=snaps)
    reps = solve_many([(params, TruncationSpec.build(params, k), cfg) for k in Ks])
    bound = max(r.max_bound_violation for r in reps)
    mono = max(r.max_monotonicity_violation for r in reps)
    order = min(verify_comparison(a, b) for a, b in zip(reps[:-1], reps[1:]))
    lo_spec, up_spec = BarrierSpec.lower(params), BarrierSpec.upper(params)
    sandwich = 0.0
    for k, rep in zip(Ks, reps):
        start = truncated_field(params, TruncationSpec.build(params, k), grid)
        lo = evolve(start, SolverConfig(grid, t_end, dt=dt, snapshots=snaps, mode=LINEAR, lam=lo_spec.lam))
        up = evolve(start, SolverConfig(grid, t_end, dt=dt, snapshots=snaps, mode=LINEAR, lam=up_spec.lam))
        sandwich = max(sandwich, -verify_comparison(lo, rep), -verify_comparison(rep, up))
    ok = bound <= tol and -order <= tol and sandwich <= sandwich_tol
    return CheckResult("subcritical-bounds", ok, max(bound, -order), tol,
                       {"bound_violation": bound, "monotonicity_violation": mono,
                        "K_ordering_min_gap": order, "sandwich_violation": sandwich,
                        "sandwich_tol": sandwich_tol, "K": list(Ks), "n": n, "r_max": r_max,
                        "dt": dt, "t_end": t_end})


@_timed
def check_scaling(params: ModelParams = ModelParams(3, 0.5), scale: float = 2.0,
                  ns=(256, 512, 1024, 2048), r_max: float = 40.0, stretch: float = 5.0,
                  dt_factor: float = 1.0, t: float = 0.25, tol: float = 1e-4,
                  min_order: float = 1.5) -> CheckResult:
    """``scale^(2-d) M^K(scale^2 t, scale r) = M^(K scale)(t, r)`` under refinement."""
    errs = []
    for n in ns:
        grid = RadialGrid.geometric(r_max, n, stretch=stretch)
        errs.append(verify_scaling(params, 1.0, scale, SolverConfig(grid, t, dt=dt_factor / n), t=t))
    order = _order(ns, errs)
    decreasing = all(b < a for a, b in zip(errs[:-1], errs[1:]))
    ok = errs[-1] <= tol and order >= min_order and decreasing
    return CheckResult("scaling", ok, errs[-1], tol,
                       {"errors": dict(zip(map(str, ns), errs)), "order": order,
                        "min_order": min_order, "scale": scale, "t": t, "r_max": r_max,
                        "stretch": stretch, "dt": f"{dt_factor}/N"})


@_timed
def check_self_similar(params: ModelParams = ModelParams(3, 0.5), K: float = 1.0,
                       times=(4.0, 16.0), r_max: float = 200.0, n: int = 4096,
                       target_error: float = 1e-7, y_max: float = 20.0, tol: float = 1e-3) -> CheckResult:
    """Weighted distance of rescaled snapshots to the shooting profile: decreasing and small."""
    profile = match_profile(params, y_max)
    grid = RadialGrid.geometric(r_max, n)
    cfg = SolverConfig(grid, max(times), dt=1e-2, dt_policy="adaptive",
                       target_error=target_error, snapshots=tuple(times))
    rep = solve_many([(params, TruncationSpec.build(params, K), cfg)])[0]
    dists = []
    for t in times:
        ext = extract_profile(rep, t)
        dists.append(weighted_distance(profile, ext, y_max=min(y_max, 0.5 * r_max / math.sqrt(t))))
    decreasing = all(b < a for a, b in zip(dists[:-1], dists[1:]))
    ok = decreasing and dists[-1] <= tol
    return CheckResult("self-similar-convergence", ok, dists[-1], tol,
                       {"distances": dict(zip(map(str, times), dists)), "decreasing": decreasing,
                        "K": K, "r_max": r_max, "n": n, "target_error": target_error,
                        "a_star": profile.a})


@_timed
def check_profile_limits(params: ModelParams = ModelParams(3, 0.5), y_max: float = 20.0,
                         agree_tol: float = 1e-4, spread_tol: float = 1e-6, tail_tol: float = 1e-3,
                         tail_range=(0.9, 1.1)) -> CheckResult:
    """Three ``U(0+)`` estimates, ``y*`` independence, ``U(y_max)`` and the tail ratio."""
    profile = match_profile(params, y_max)
    lim = profile_limits(profile, integrating_factor(profile, 1.0), 2.0)
    parts = {
        "U0_agreement": lim.U0_spread <= agree_tol,
        "U0_lower_bound": min(lim.U0_direct, lim.U0_mass_ratio, lim.U0_explicit) >= params.epsilon - agree_tol,
        "y_star_spread": lim.y_star_spread <= spread_tol,
        "U_at_ymax": lim.U_at_ymax <= tail_tol,
        "tail": tail_range[0] <= lim.tail <= tail_range[1],
    }
    return CheckResult("profile-limits", all(parts.values()), lim.U0_spread, agree_tol,
                       {**lim.to_dict(), "parts": parts, "y_max": y_max, "a_star": profile.a})


@_timed
def check_g_constancy(params: ModelParams = ModelParams(3, 0.5), times=(0.5, 1.0, 2.0, 4.0),
                      y_star: float = 1.0, tol: float = 1e-6) -> CheckResult:
    """``g_{y*}(t)`` of the upper barrier does not depend on ``t`` and obeys its Beta bound."""
    spec = BarrierSpec.upper(params)
    g = [g_diagnostic(spec, t, y_star) for t in times]
    spread = (max(g) - min(g)) / abs(np.mean(g))
    bound = g_bound(spec, y_star)
    ok = spread <= tol and max(g) <= bound
    return CheckResult("g-constancy", ok, spread, tol,
                       {"g": dict(zip(map(str, times), g)), "bound": bound, "y_star": y_star,
                        "lambda": spec.lam})


@_timed
def check_radial_residual(params: ModelParams = ModelParams(3, 0.5), times=(1.0, 1.01),
                          r_max: float = 10.0, n: int = 2048, tol: float = 1e-3,
                          ns=(256, 512, 1024, 2048), window=(0.5, 5.0), min_order: float = 1.9,
                          y_max: float = 20.0) -> CheckResult:
    """Density-equation residual of the matched solution; mass and density forms agree at second order."""
    profile = match_profile(params, y_max)
    t0, t1 = times

    def fields(k):
        grid = RadialGrid.uniform(r_max, k)
        return self_similar_fields(profile, grid, t0), self_similar_fields(profile, grid, t1)

    (m0, u0), (m1, u1) = fields(n)
    res = radial_equation_residual(u1, u0)
    gaps = []
    for k in ns:
        (a0, b0), (a1, b1) = fields(k)
        gaps.append(formulation_gap(a1, a0, b1, b0, window))
    order = _order(ns, gaps)
    ok = res <= tol and order >= min_order
    return CheckResult("radial-residual", ok, res, tol,
                       {"formulation_gaps": dict(zip(map(str, ns), gaps)), "order": order,
                        "min_order": min_order, "times": list(times), "r_max": r_max, "n": n,
                        "window": list(window)})


CHECKS = {
    "threshold-bounds": check_threshold,
    "special-functions": check_special_functions,
    "linear-oracle": check_linear_oracle,
    "chandrasekhar": check_chandrasekhar,
    "subcritical-bounds": check_subcritical,
    "scaling": check_scaling,
    "self-similar-convergence": check_self_similar,
    "profile-limits": check_profile_limits,
    "g-constancy": check_g_constancy,
    "radial-residual": check_radial_residual,
}

# checks parameterised by (d, eps)
PARAMETRIC = {"linear-oracle", "chandrasekhar", "subcritical-bounds", "scaling",
              "self-similar-convergence", "profile-limits", "g-constancy", "radial-residual"}

PRESETS = {
    "paper": tuple(CHECKS),
    "quick": ("threshold-bounds", "special-functions", "chandrasekhar", "g-constancy",
              "profile-limits"),
}


def run_check(name: str, params: ModelParams | None = None, **kwargs) -> CheckResult:
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}")
    if params is not None and name in PARAMETRIC:
        kwargs["params"] = params
    return CHECKS[name](**kwargs)
