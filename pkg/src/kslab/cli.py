"""Command-line harness: ``kslab {constant,solve,profile,barrier,verify,sweep}``.

Exit codes: 0 pass, 1 invariant failure, 2 usage error, 3 numerical failure
(quadrature, ODE, linear algebra), 4 blow-up signal. Options may also come
from a JSON file given by ``--config``; flags on the command line win. A
manifest written by an earlier run is accepted as a config file.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, blowup, checks
from ._backend import backend_name, max_threads
from .barrier import BarrierSpec, barrier_value, g_bound, g_diagnostic
from .masspde import (BlowUpSignal, NumericalFailure, SolverConfig, solve, write_snapshots_csv)
from .model import CriticalWarning, ModelParams, RadialGrid, TruncationSpec, radial_concentration
from .poisson import density_from_mass
from .profile import (ShootingError, extract_profile, integrating_factor, match_profile,
                      profile_limits, weighted_distance, write_profile_csv, write_profile_json)
from .specfun import ADAPTIVE, QuadratureError, QuadratureSpec

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE, EXIT_NUMERICAL, EXIT_BLOWUP = 0, 1, 2, 3, 4


class UsageError(ValueError):
    """Bad or inconsistent options."""


# ---------------------------------------------------------------------------
# option parsing helpers
# ---------------------------------------------------------------------------
def parse_dims(value) -> list[int]:
    """``3``, ``"3..10"``, ``"3,5,8"`` or a list of these."""
    if isinstance(value, (list, tuple)):
        out = []
        for v in value:
            out.extend(parse_dims(v))
        return out
    if isinstance(value, int):
        return [value]
    text = str(value).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise UsageError(f"empty dimension range {text!r}")
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad dimension spec {text!r}") from exc


def parse_floats(value) -> list[float]:
    """``"0.5,1,2"``, ``"a:b:step"`` (inclusive) or a list."""
    if value is None:
        return []
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    text = str(value).strip()
    try:
        if text.count(":") == 2:
            a, b, s = (float(v) for v in text.split(":"))
            if not s > 0 or b < a:
                raise UsageError(f"bad range {text!r}")
            n = int(math.floor((b - a) / s + 1e-9))
            return [round(a + k * s, 12) for k in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _single_dim(args) -> int:
    if args.dim is None:
        raise UsageError("--dim is required")
    dims = parse_dims(args.dim)
    if len(dims) != 1:
        raise UsageError("this command takes a single --dim")
    if dims[0] < 3:
        raise UsageError(f"d must be >= 3, got {dims[0]}")
    return dims[0]


def _params(args) -> ModelParams:
    d = _single_dim(args)
    if not args.epsilon > 0:
        raise UsageError("--epsilon must be positive")
    return ModelParams(d, args.epsilon)


def _grid(kind: str, r_max: float, n: int) -> RadialGrid:
    if not (r_max > 0 and n >= 2):
        raise UsageError("need --rmax > 0 and --nr >= 2")
    return RadialGrid.uniform(r_max, n) if kind == "uniform" else RadialGrid.geometric(r_max, n)


def _regime_note(params: ModelParams) -> None:
    if params.epsilon == 1.0:
        print("warning: epsilon = 1 is critical; no existence guarantee applies", file=sys.stderr)
    elif params.epsilon > 1.0:
        label = blowup.classify(params.d, params.epsilon)
        print(f"warning: epsilon > 1 ({label}); results are exploratory", file=sys.stderr)


def _resolved(args) -> dict:
    skip = {"func", "config", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _dump(data, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _manifest(args, outputs, invariants, wall, extra=None) -> dict:
    data = {
        "command": args.command,
        "config": _resolved(args),
        "version": f"kslab {__version__} ({backend_name()})",
        "wall_time": wall,
        "outputs": outputs,
        "invariants": invariants,
        "passed": all(v["passed"] for v in invariants.values()),
    }
    if extra:
        data.update(extra)
    return data


def _invariant(value, tol, passed=None) -> dict:
    ok = (value <= tol) if passed is None else passed
    return {"value": float(value), "tolerance": float(tol), "passed": bool(ok)}


def _outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _finish(args, outputs, invariants, t0, extra=None, manifest_dir=None) -> int:
    data = _manifest(args, outputs, invariants, time.perf_counter() - t0, extra)
    target = args.manifest or (os.path.join(manifest_dir, "manifest.json") if manifest_dir else None)
    if target:
        data["outputs"] = outputs + [target]
        _dump(data, target)
    for name, inv in invariants.items():
        status = "PASS" if inv["passed"] else "FAIL"
        print(f"{status} {name}: value={inv['value']:.4g} tol={inv['tolerance']:.3g}", file=sys.stderr)
    return EXIT_OK if data["passed"] else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_constant(args) -> int:
    t0 = time.perf_counter()
    dims = parse_dims(args.dim if args.dim is not None else "3..10")
    if not dims or min(dims) < 3:
        raise UsageError("dimensions must be >= 3")
    quad = QuadratureSpec(scheme=ADAPTIVE, rel_tol=args.tol, max_depth=30)
    rows = blowup.threshold_table(dims, quad)
    invariants = {f"chain-d{r.d}": _invariant(-r.min_gap(), 0.0, r.chain_holds()) for r in rows}
    outputs = []
    if args.format == "json":
        text = json.dumps([r.to_dict() for r in rows], sort_keys=True, indent=2) + "\n"
    else:
        lines = [",".join(blowup.TABLE_HEADER)]
        lines += [",".join([str(r.d)] + [repr(float(x)) for x in r.row()[1:]]) for r in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        outputs.append(args.out)
    else:
        sys.stdout.write(text)
    return _finish(args, outputs, invariants, t0)


def _solver_config(args, grid, t_end, snapshots) -> SolverConfig:
    return SolverConfig(grid, t_end, dt=args.dt, dt_policy=args.dt_policy,
                        target_error=args.target_error, snapshots=tuple(snapshots),
                        scheme=args.scheme, newton=args.newton, cap=args.cap)


def _snapshots_json(report, path) -> None:
    data = []
    for snap in report.snapshots:
        data.append({"t": snap.t, "r": snap.r.tolist(), "M": snap.values.tolist(),
                     "u": density_from_mass(snap, limiter=True).tolist()})
    _dump({"snapshots": data}, path)


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    params = _params(args)
    if not (args.K > 0 and args.t_end > 0):
        raise UsageError("--K and --t-end must be positive")
    _regime_note(params)
    grid = _grid(args.grid, args.rmax, args.nr)
    snaps = parse_floats(args.snapshots)
    config = _solver_config(args, grid, args.t_end, snaps)
    out = _outdir(args.out)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = solve(params, TruncationSpec.build(params, args.K), config)
    except BlowUpSignal as sig:
        payload = {"blow_up": {"message": str(sig), "t": sig.t,
                               "classification": blowup.classify(params.d, params.epsilon)}}
        if sig.report is not None:
            payload["partial"] = sig.report.to_dict()
        _finish(args, [], {}, t0, payload, out)
        print(f"blow-up signal: {sig}", file=sys.stderr)
        return EXIT_BLOWUP
    outputs = []
    path = os.path.join(out, "snapshots." + args.format)
    if args.format == "json":
        _snapshots_json(report, path)
    else:
        write_snapshots_csv(report, path)
    outputs.append(path)
    invariants = {}
    if params.epsilon < 1.0:
        invariants["bound"] = _invariant(report.max_bound_violation, args.tol)
        invariants["monotonicity"] = _invariant(report.max_monotonicity_violation, args.tol)
    final = report.snapshots[-1]
    extra = {"report": report.to_dict(), "radial_concentration": radial_concentration(final)}
    return _finish(args, outputs, invariants, t0, extra, out)


def cmd_profile(args) -> int:
    t0 = time.perf_counter()
    params = _params(args)
    _regime_note(params)
    if params.epsilon > 1.0:
        raise UsageError("profiles exist only for epsilon <= 1")
    guaranteed = params.epsilon < 1.0
    out = _outdir(args.out)
    outputs, invariants, extra = [], {}, {}
    tol = args.tol
    shot = None
    if args.method in ("shoot", "both"):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", CriticalWarning)
                shot = match_profile(params, args.ymax)
        except ShootingError as exc:
            _dump({"error": str(exc), "phi_trace": exc.trace}, os.path.join(out, "shooting_failure.json"))
            print(f"shooting failed: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        factor = integrating_factor(shot, args.y_star)
        limits = profile_limits(shot, factor, args.alt_y_star)
        path = os.path.join(out, "profile_shoot.csv")
        write_profile_csv(shot, path, factor)
        jpath = os.path.join(out, "profile_shoot.json")
        write_profile_json(shot, jpath, limits)
        outputs += [path, jpath]
        extra["a_star"] = shot.a
        extra["limits"] = limits.to_dict()
        u0 = min(limits.U0_direct, limits.U0_mass_ratio, limits.U0_explicit)
        invariants["U0_lower_bound"] = _invariant(params.epsilon - u0, tol)
        invariants["U0_agreement"] = _invariant(limits.U0_spread, tol)
        invariants["y_star_independence"] = _invariant(limits.y_star_spread, 1e-6)
        invariants["tail"] = _invariant(abs(limits.tail - 1.0), 0.1)
    if args.method in ("extract", "both"):
        grid = _grid("geometric", args.rmax, args.nr)
        t_x = args.t_extract
        cfg = SolverConfig(grid, t_x, dt=1e-2, dt_policy="adaptive", target_error=args.target_error,
                           snapshots=(t_x,))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = solve(params, TruncationSpec.build(params, args.K), cfg)
        except BlowUpSignal as sig:
            print(f"blow-up signal: {sig}", file=sys.stderr)
            return EXIT_BLOWUP
        ext = extract_profile(rep, t_x)
        path = os.path.join(out, "profile_extract.csv")
        write_profile_csv(ext, path)
        outputs.append(path)
        extra["extract"] = {"t": t_x, "U0": float(ext.U_values[0]), "phi": ext.phi}
        if shot is not None:
            y_cap = min(args.ymax, 0.5 * args.rmax / math.sqrt(t_x))
            dist = weighted_distance(shot, ext, y_max=y_cap)
            extra["cross_distance"] = dist
            invariants["cross_distance"] = _invariant(dist, args.distance_tol)
    if not guaranteed:
        for inv in invariants.values():
            inv["passed"] = True
        extra["note"] = "critical epsilon: diagnostics reported, guarantees disclaimed"
    return _finish(args, outputs, invariants, t0, extra, out)


def cmd_barrier(args) -> int:
    t0 = time.perf_counter()
    params = _params(args)
    specs = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.lam is not None:
            c0 = args.c0 if args.c0 is not None else params.chandrasekhar_coefficient()
            specs.append(("custom", BarrierSpec(args.lam, c0, params)))
        else:
            if args.which in ("lower", "both"):
                specs.append(("lower", BarrierSpec.lower(params)))
            if args.which in ("upper", "both"):
                specs.append(("upper", BarrierSpec.upper(params)))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    times = parse_floats(args.times)
    if not times or min(times) <= 0:
        raise UsageError("--times must be positive")
    grid = _grid("uniform", args.rmax, args.nr)
    r = grid.nodes
    out = _outdir(args.out)
    rows, invariants, values = [], {}, {}
    for name, spec in specs:
        for t in times:
            m = barrier_value(spec, t, r)
            values[(name, t)] = m
            norm = np.zeros_like(m)
            norm[1:] = m[1:] / (2.0 * params.sigma_d * r[1:] ** (params.d - 2))
            rows += [(name, spec.lam, t, float(ri), float(mi), float(ni)) for ri, mi, ni in zip(r, m, norm)]
        if spec.lam > params.d - 3:
            g = [g_diagnostic(spec, t, args.y_star) for t in times]
            bound = g_bound(spec, args.y_star)
            spread = (max(g) - min(g)) / abs(np.mean(g))
            invariants[f"g-constancy-{name}"] = _invariant(spread, 1e-6)
            invariants[f"g-bound-{name}"] = _invariant(max(g) - bound, 0.0, max(g) <= bound)
    if args.which == "both" and args.lam is None:
        gap = min(float(np.min(values[("upper", t)] - values[("lower", t)])) for t in times)
        invariants["ordering"] = _invariant(-gap, 1e-12)
    path = os.path.join(out, "barrier.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("which", "lambda", "t", "r", "m", "m_normalized"))
        for row in rows:
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
    extra = {"barriers": {name: spec.to_dict() for name, spec in specs}}
    return _finish(args, [path], invariants, t0, extra, out)


def _check_kwargs(name, args) -> dict:
    kw = {}
    if name == "scaling" and args.scale is not None:
        kw["scale"] = args.scale
    return kw


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    names = list(args.check) if args.check else list(checks.PRESETS[args.preset])
    unknown = [n for n in names if n not in checks.CHECKS]
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(unknown)}")
    params = ModelParams(_single_dim(args), args.epsilon) if args.dim is not None else \
        ModelParams(3, args.epsilon)
    names = sorted(set(names))

    def run(name):
        try:
            return checks.run_check(name, params, **_check_kwargs(name, args)), None
        except (QuadratureError, ShootingError, NumericalFailure, BlowUpSignal) as exc:
            return checks.CheckResult(name, False, math.nan, math.nan, {"error": str(exc)}), exc

    results, numerical = [], False
    threads = 1 if args.fail_fast else min(max_threads(), len(names))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, names))
    else:
        outcomes = []
        for name in names:
            outcomes.append(run(name))
            if args.fail_fast and not outcomes[-1][0].passed:
                break
    for res, exc in outcomes:
        results.append(res)
        numerical |= exc is not None
        print(res.line())
    report = {"checks": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    invariants = {r.name: {"value": r.value, "tolerance": r.tolerance, "passed": r.passed} for r in results}
    if args.out:
        _dump({**_manifest(args, [args.out], invariants, time.perf_counter() - t0), **report}, args.out)
    if numerical:
        return EXIT_NUMERICAL
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def _sweep_profile(params, args):
    prof = match_profile(params, args.ymax)
    lim = profile_limits(prof, integrating_factor(prof, 1.0), 2.0)
    return {"d": params.d, "epsilon": params.epsilon, "a_star": prof.a, "phi": prof.phi,
            "U0_direct": lim.U0_direct, "U0_mass_ratio": lim.U0_mass_ratio,
            "U0_explicit": lim.U0_explicit, "tail": lim.tail}


def _sweep_solve(params, K, args):
    grid = _grid(args.grid, args.rmax, args.nr)
    cfg = SolverConfig(grid, args.t_end, dt=args.dt)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = solve(params, TruncationSpec.build(params, K), cfg)
    return {"d": params.d, "epsilon": params.epsilon, "K": K,
            "bound_violation": rep.max_bound_violation,
            "monotonicity_violation": rep.max_monotonicity_violation,
            "radial_concentration": radial_concentration(rep.snapshots[-1])}


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    eps_list = parse_floats(args.epsilon)
    if args.kind == "threshold":
        dims = parse_dims(args.dim if args.dim is not None else "3..20")
        if min(dims) < 3:
            raise UsageError("dimensions must be >= 3")
        jobs = [lambda d=d: blowup.compute_threshold(d).to_dict() for d in dims]
    else:
        d = _single_dim(args)
        if not eps_list or min(eps_list) <= 0:
            raise UsageError("--epsilon needs positive values")
        if args.kind == "profile":
            if max(eps_list) >= 1.0:
                raise UsageError("profile sweeps need epsilon < 1")
            jobs = [lambda e=e: _sweep_profile(ModelParams(d, e), args) for e in eps_list]
        else:
            Ks = parse_floats(args.K)
            jobs = [lambda e=e, k=k: _sweep_solve(ModelParams(d, e), k, args)
                    for e in eps_list for k in Ks]
    threads = min(max_threads(), len(jobs))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda job: job(), jobs))
    else:
        rows = [job() for job in jobs]
    out = _outdir(args.out)
    path = os.path.join(out, f"sweep_{args.kind}.csv")
    keys = [k for k in rows[0] if not isinstance(rows[0][k], (dict, list))]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for row in rows:
            w.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in keys])
    invariants = {}
    if args.kind == "threshold":
        for row in rows:
            invariants[f"chain-d{row['d']}"] = _invariant(0.0, 0.0, row["chain_ok"])
    elif args.kind == "profile":
        for row in rows:
            invariants[f"U0-eps{row['epsilon']}"] = _invariant(row["epsilon"] - row["U0_direct"], 1e-4)
    else:
        for row in rows:
            if row["epsilon"] < 1.0:
                invariants[f"bound-eps{row['epsilon']}-K{row['K']}"] = _invariant(row["bound_violation"], 1e-6)
    return _finish(args, [path], invariants, t0, None, out)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
def _common(p, *, dim_help="spatial dimension d >= 3"):
    p.add_argument("--config", help="JSON file with option defaults (flags override)")
    p.add_argument("--manifest", help="write the run manifest to this path")
    p.add_argument("--dim", default=None, help=dim_help)


def _solver_opts(p):
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--dt-policy", choices=("fixed", "adaptive"), default="fixed")
    p.add_argument("--target-error", type=float, default=1e-6)
    p.add_argument("--scheme", choices=("bdf2", "euler"), default="bdf2")
    p.add_argument("--newton", action="store_true")
    p.add_argument("--cap", type=float, default=1e8, help="density cap that signals blow-up")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("constant", help="threshold C(d) and its bounds")
    _common(p, dim_help="d, a range 3..10 or a list 3,5,8")
    p.add_argument("--tol", type=float, default=1e-10, help="relative quadrature tolerance")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="table file (default: stdout)")
    p.set_defaults(func=cmd_constant)
    subs["constant"] = p

    p = sub.add_parser("solve", help="evolve the truncated mass distribution")
    _common(p)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--rmax", type=float, default=40.0)
    p.add_argument("--nr", type=int, default=2048)
    p.add_argument("--grid", choices=("geometric", "uniform"), default="geometric")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--snapshots", default=None, help="extra output times, e.g. 0.25,0.5")
    p.add_argument("--tol", type=float, default=1e-6, help="invariant tolerance")
    p.add_argument("--out", default="kslab_solve")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _solver_opts(p)
    p.set_defaults(func=cmd_solve)
    subs["solve"] = p

    p = sub.add_parser("profile", help="self-similar profile by shooting and/or extraction")
    _common(p)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--ymax", type=float, default=20.0)
    p.add_argument("--method", choices=("shoot", "extract", "both"), default="shoot")
    p.add_argument("--y-star", type=float, default=1.0)
    p.add_argument("--alt-y-star", type=float, default=2.0)
    p.add_argument("--K", type=float, default=40.0, help="truncation level for extraction")
    p.add_argument("--rmax", type=float, default=400.0)
    p.add_argument("--nr", type=int, default=8192)
    p.add_argument("--t-extract", type=float, default=256.0)
    p.add_argument("--target-error", type=float, default=1e-7)
    p.add_argument("--tol", type=float, default=1e-4, help="U(0+) tolerance")
    p.add_argument("--distance-tol", type=float, default=1e-3)
    p.add_argument("--out", default="kslab_profile")
    p.set_defaults(func=cmd_profile)
    subs["profile"] = p

    p = sub.add_parser("barrier", help="explicit linear barriers and g diagnostics")
    _common(p)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--which", choices=("upper", "lower", "both"), default="both")
    p.add_argument("--lam", type=float, default=None, help="explicit drift parameter")
    p.add_argument("--c0", type=float, default=None)
    p.add_argument("--times", default="0.5,1,2,4")
    p.add_argument("--rmax", type=float, default=10.0)
    p.add_argument("--nr", type=int, default=512)
    p.add_argument("--y-star", type=float, default=1.0)
    p.add_argument("--out", default="kslab_barrier")
    p.set_defaults(func=cmd_barrier)
    subs["barrier"] = p

    p = sub.add_parser("verify", help="run the verification suite")
    _common(p)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--preset", choices=sorted(checks.PRESETS), default="paper")
    p.add_argument("--check", action="append", default=None,
                   help=f"check name (repeatable): {', '.join(checks.CHECKS)}")
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--fail-fast", action="store_true")
    p.add_argument("--out", default=None, help="JSON report path")
    p.set_defaults(func=cmd_verify)
    subs["verify"] = p

    p = sub.add_parser("sweep", help="parameter sweeps")
    _common(p)
    p.add_argument("--kind", choices=("profile", "solve", "threshold"), default="profile")
    p.add_argument("--epsilon", default="0.1:0.9:0.1")
    p.add_argument("--K", default="1")
    p.add_argument("--ymax", type=float, default=20.0)
    p.add_argument("--rmax", type=float, default=40.0)
    p.add_argument("--nr", type=int, default=1024)
    p.add_argument("--grid", choices=("geometric", "uniform"), default="geometric")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--out", default="kslab_sweep")
    p.set_defaults(func=cmd_sweep)
    subs["sweep"] = p

    parser._kslab_subs = subs
    return parser


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    if "config" in data and "command" in data:
        data = data["config"]
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_args(argv=None, parser=None):
    parser = parser or build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        sub = parser._kslab_subs[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(cfg) - known - {"config", "command", "func"})
        if bad:
            raise UsageError(f"unknown config keys: {', '.join(bad)}")
        cfg.pop("config", None)
        cfg.pop("manifest", None)
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parse_args(argv, parser)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"kslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ShootingError, NumericalFailure) as exc:
        print(f"kslab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BlowUpSignal as exc:
        print(f"kslab: blow-up signal: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
