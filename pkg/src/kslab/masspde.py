"""Finite-difference solver for the radial mass distribution.

Nonlinear mode solves

    M_t = M_rr - ((d-1)/r) M_r + M M_r / (sigma_d r^(d-1)),   M(t, 0) = 0,

and linear mode the Bessel-drift problem ``m_t = m_rr - (lam/r) m_r``. The
outer boundary is Dirichlet with the initial value at ``r_max``. Time
stepping is the semi-implicit BDF2 of :mod:`kslab._kernels` (or backward
Euler), with the drift coefficient extrapolated from previous levels.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import _kernels as K
from ._backend import backend_name, max_threads
from .barrier import BarrierSpec, barrier_value
from .model import (MassField, ModelParams, RadialGrid, TruncationSpec,
                    truncated_field)
from .poisson import density_from_mass

FULL = "full"
LINEAR = "linear"


class BlowUpSignal(RuntimeError):
    """Diagnostic only: the density cap was exceeded or the step size underflowed."""

    def __init__(self, message, t=None, report=None):
        super().__init__(message)
        self.t = t
        self.report = report


class NumericalFailure(RuntimeError):
    """Singular tridiagonal system, non-finite values or Newton failure."""


@dataclass(frozen=True)
class SolverConfig:
    """Settings of one solve.

    ``dt_policy`` is ``"fixed"`` (steps of at most ``dt``, shortened to land
    on snapshot times) or ``"adaptive"`` (``dt`` adjusted so the normalized
    deviation of the new level from its linear extrapolation stays near
    ``target_error``). ``scheme`` is ``"bdf2"`` or ``"euler"``. ``fit``
    sets how far out the near-origin stencils fitted to ``M = O(r^d)`` are
    used (``0`` gives plain three-point stencils everywhere, appropriate for
    the singular Chandrasekhar field).
    """

    grid: RadialGrid
    t_end: float
    dt: float = 1e-3
    dt_policy: str = "fixed"
    target_error: float = 1e-6
    dt_min: float = 1e-12
    dt_max: float = math.inf
    mode: str = FULL
    lam: float | None = None
    outer: str = "dirichlet"
    snapshots: tuple = ()
    scheme: str = "bdf2"
    newton: bool = False
    cap: float = 1e8
    fit: float = K.DEFAULT_FIT
    use_numba: bool | None = None

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt_policy not in ("fixed", "adaptive"):
            raise ValueError(f"unknown dt policy {self.dt_policy!r}")
        if self.mode not in (FULL, LINEAR):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == LINEAR and self.lam is None:
            raise ValueError("linear mode needs lam")
        if self.outer != "dirichlet":
            raise ValueError("only the Dirichlet outer boundary is implemented")
        if self.scheme not in ("bdf2", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        snaps = tuple(sorted({float(s) for s in self.snapshots} | {float(self.t_end)}))
        if snaps and (snaps[0] < 0 or snaps[-1] > self.t_end * (1 + 1e-12)):
            raise ValueError("snapshot times must lie in [0, t_end]")
        object.__setattr__(self, "snapshots", snaps)

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "t_end": self.t_end, "dt": self.dt,
                "dt_policy": self.dt_policy, "target_error": self.target_error,
                "dt_min": self.dt_min, "dt_max": self.dt_max if math.isfinite(self.dt_max) else None,
                "mode": self.mode, "lam": self.lam, "outer": self.outer,
                "snapshots": list(self.snapshots), "scheme": self.scheme,
                "newton": self.newton, "cap": self.cap, "fit": self.fit}


@dataclass
class SolveReport:
    snapshots: list
    max_bound_violation: float
    max_monotonicity_violation: float
    stats: dict = field(default_factory=dict)
    status: str = "ok"
    config: SolverConfig | None = None

    def times(self) -> list[float]:
        return [s.t for s in self.snapshots]

    def at(self, t: float, rtol: float = 1e-9) -> MassField:
        for s in self.snapshots:
            if abs(s.t - t) <= rtol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")

    def to_dict(self) -> dict:
        snap = self.snapshots[0] if self.snapshots else None
        return {
            "status": self.status,
            "params": snap.params.to_dict() if snap else None,
            "config": self.config.to_dict() if self.config else None,
            "max_bound_violation": self.max_bound_violation,
            "max_monotonicity_violation": self.max_monotonicity_violation,
            "snapshot_times": self.times(),
            "stats": self.stats,
        }


def _mode_code(config):
    return K.MODE_LINEAR if config.mode == LINEAR else K.MODE_NONLINEAR


def _normalized_bound(params, r, m):
    return float(np.max(m[1:] / (2.0 * params.sigma_d * r[1:] ** (params.d - 2)))) - params.epsilon


def step(field: MassField, dt: float, config: SolverConfig) -> MassField:
    """One backward-Euler IMEX step with the drift lagged at the current level."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    p = field.params
    m = np.array(field.values, dtype=float)
    m_prev = m.copy()
    status, _ = K.advance(field.r, m, m_prev, dt, 0.0, 1, d=p.d, sigma=p.sigma_d,
                          lam=config.lam or 0.0, mode=_mode_code(config), bdf2=False,
                          newton=config.newton, m_outer=float(field.values[-1]),
                          cap=config.cap, fit=config.fit, use_numba=config.use_numba)
    if status == K.STATUS_CAP:
        raise BlowUpSignal("density cap exceeded", t=field.t + dt)
    if status != K.STATUS_OK:
        raise NumericalFailure(f"step failed with status {status}")
    return MassField(field.grid, field.t + dt, m, p)


def evolve(initial: MassField, config: SolverConfig) -> SolveReport:
    """Advance ``initial`` through the snapshot schedule of ``config``."""
    p = initial.params
    r = initial.r
    m = np.array(initial.values, dtype=float)
    m_prev = m.copy()
    m_outer = float(m[-1])
    lam = float(config.lam or 0.0)
    mode = _mode_code(config)
    t = float(initial.t)
    dt_prev = 0.0
    bdf2 = config.scheme == "bdf2"
    kstats = np.zeros(2, dtype=np.int64)
    snaps = []
    bound = max(0.0, _normalized_bound(p, r, m)) if mode == K.MODE_NONLINEAR else 0.0
    mono = max(0.0, -float(np.min(np.diff(m))))
    rejected = 0
    dt = min(config.dt, config.dt_max)
    start = time.perf_counter()
    status_name = "ok"
    for target in config.snapshots:
        if target < t - 1e-12 * max(1.0, t):
            continue
        n_fixed = 0
        if config.dt_policy == "fixed":
            remaining = target - t
            n_fixed = max(1, math.ceil(remaining / config.dt * (1 - 1e-12))) if remaining > 0 else 0
            h_fixed = remaining / n_fixed if n_fixed else 0.0
        k = 0
        while (k < n_fixed) if config.dt_policy == "fixed" else (t < target * (1 - 1e-14)):
            if config.dt_policy == "fixed":
                h = h_fixed
                k += 1
            else:
                remaining = target - t
                h = min(dt, remaining)
                if remaining - h < 0.25 * h:
                    h = remaining
                saved = (m.copy(), m_prev.copy())
            status, done = K.advance(r, m, m_prev, h, dt_prev, 1, d=p.d, sigma=p.sigma_d,
                                     lam=lam, mode=mode, bdf2=bdf2, newton=config.newton,
                                     m_outer=m_outer, cap=config.cap, fit=config.fit, stats=kstats,
                                     use_numba=config.use_numba)
            if status == K.STATUS_CAP:
                status_name = "blowup"
                t += h
                break
            if status != K.STATUS_OK:
                raise NumericalFailure(f"kernel status {status} at t={t:.6g}")
            if config.dt_policy == "adaptive":
                err = _step_error(p, r, m, saved, h, dt_prev)
                if err > 2.0 * config.target_error and h > config.dt_min:
                    m[:], m_prev[:] = saved
                    kstats[0] -= 1
                    rejected += 1
                    dt = max(config.dt_min, h * max(0.2, 0.9 * math.sqrt(config.target_error / err)))
                    if dt <= config.dt_min:
                        status_name = "blowup"
                        break
                    continue
                grow = 0.9 * math.sqrt(config.target_error / max(err, 1e-300))
                dt = min(config.dt_max, h * min(2.0, max(0.5, grow)))
            t = target if (config.dt_policy == "fixed" and k == n_fixed) or h == target - t else t + h
            dt_prev = h
            if mode == K.MODE_NONLINEAR:
                bound = max(bound, _normalized_bound(p, r, m))
            mono = max(mono, -float(np.min(np.diff(m))))
        if status_name != "ok":
            break
        snaps.append(MassField(initial.grid, target, m.copy(), p))
    stats = {"steps": int(kstats[0]), "newton_iterations": int(kstats[1]),
             "rejected": rejected, "wall_time": time.perf_counter() - start,
             "backend": backend_name() if config.use_numba is None else
             ("numba" if config.use_numba else "numpy")}
    report = SolveReport(snaps, max(0.0, bound), max(0.0, mono), stats, status_name, config)
    if status_name == "blowup":
        raise BlowUpSignal(f"candidate blow-up near t={t:.6g} (diagnostic, not a proof)",
                           t=t, report=report)
    return report


def _step_error(p, r, m, saved, h, dt_prev):
    # deviation of the new level from linear extrapolation, normalized by 2 sigma r^(d-2)
    old, older = saved
    if dt_prev <= 0:
        pred = old
    else:
        w = h / dt_prev
        pred = (1.0 + w) * old - w * older
    scale = 2.0 * p.sigma_d * r[1:] ** (p.d - 2)
    return float(np.max(np.abs(m[1:] - pred[1:]) / scale))


def solve(params: ModelParams, trunc: TruncationSpec, config: SolverConfig) -> SolveReport:
    """Evolve the truncated datum ``M_0^K`` through the schedule in ``config``."""
    if config.mode == FULL and params.epsilon <= 1.0:
        params.check_construction()
    return evolve(truncated_field(params, trunc, config.grid), config)


def solve_many(jobs, threads: int | None = None) -> list:
    """Run ``(params, trunc, config)`` jobs concurrently; results keep job order.

    The compiled kernels release the GIL, so threads overlap. Each job owns
    its arrays, so results do not depend on the thread count.
    """
    jobs = list(jobs)
    n = min(len(jobs), threads or max_threads())
    if n <= 1:
        return [solve(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda job: solve(*job), jobs))


def linear_datum_field(params: ModelParams, grid: RadialGrid, c0: float) -> MassField:
    """Homogeneous datum ``c0 r^(d-2)`` of the barrier problem."""
    return MassField(grid, 0.0, c0 * grid.nodes ** (params.d - 2), params)


def solve_linear_barrier(spec: BarrierSpec, config: SolverConfig) -> SolveReport:
    """Linear-mode run from the barrier datum, for comparison with :func:`barrier_value`."""
    cfg = replace(config, mode=LINEAR, lam=spec.lam)
    return evolve(linear_datum_field(spec.params, config.grid, spec.c0), cfg)


def barrier_error(report: SolveReport, spec: BarrierSpec, t: float = 1.0,
                  window: tuple = (0.1, 5.0)) -> float:
    """Max relative deviation from the explicit barrier on a radial window."""
    snap = report.at(t)
    r = snap.r
    mask = (r >= window[0]) & (r <= window[1])
    exact = barrier_value(spec, t, r[mask])
    return float(np.max(np.abs(snap.values[mask] - exact) / exact))


def _normalized(snap: MassField, values=None, r=None):
    p = snap.params
    r = snap.r if r is None else r
    v = snap.values if values is None else values
    return v / (2.0 * p.sigma_d * r ** (p.d - 2))


def verify_scaling(params: ModelParams, K_level: float, scale: float, config: SolverConfig,
                   t: float = 0.25, r_window: tuple | None = None) -> float:
    """``sup |scale^(2-d) M^K(scale^2 t, scale r) - M^(K scale)(t, r)|`` in the normalized variable.

    Both runs use ``config``'s grid; the first is sampled at ``scale r`` with
    monotone cubic interpolation. ``scale^2 t`` and ``t`` are added to the
    snapshot schedules.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    d = params.d
    t_big = scale * scale * t
    cfg_a = replace(config, t_end=max(t_big, t), snapshots=tuple(config.snapshots) + (t_big,))
    cfg_b = replace(config, t_end=t, snapshots=(t,))
    rep_a, rep_b = solve_many([(params, TruncationSpec.build(params, K_level), cfg_a),
                               (params, TruncationSpec.build(params, K_level * scale), cfg_b)])
    snap_a = rep_a.at(t_big)
    snap_b = rep_b.at(t)
    r = snap_b.r
    lo, hi = r_window if r_window else (r[1], 0.5 * r[-1] / max(scale, 1.0))
    mask = (r >= lo) & (r <= hi) & (r > 0) & (scale * r <= snap_a.r[-1])
    interp = PchipInterpolator(snap_a.r, snap_a.values)
    lhs = scale ** (2 - d) * interp(scale * r[mask])
    diff = np.abs(lhs - snap_b.values[mask]) / (2.0 * params.sigma_d * r[mask] ** (d - 2))
    return float(np.max(diff))


def verify_comparison(lower: SolveReport, upper: SolveReport, r_window: tuple | None = None) -> float:
    """Most negative normalized ``upper - lower`` over shared snapshots and nodes."""
    if len(lower.snapshots) != len(upper.snapshots):
        raise ValueError("snapshot schedules differ")
    worst = math.inf
    for a, b in zip(lower.snapshots, upper.snapshots):
        if abs(a.t - b.t) > 1e-12 * max(1.0, a.t):
            raise ValueError("snapshot schedules differ")
        if a.r.shape != b.r.shape or not np.allclose(a.r, b.r, rtol=0, atol=0):
            raise ValueError("evaluation grids differ")
        r = a.r
        mask = r > 0
        if r_window is not None:
            mask &= (r >= r_window[0]) & (r <= r_window[1])
        gap = (b.values[mask] - a.values[mask]) / (2.0 * a.params.sigma_d * r[mask] ** (a.params.d - 2))
        worst = min(worst, float(np.min(gap)))
    return worst


def snapshots_rows(report: SolveReport):
    for snap in report.snapshots:
        norm = np.zeros_like(snap.values)
        norm[1:] = _normalized(snap, snap.values[1:], snap.r[1:])
        u = density_from_mass(snap, limiter=True)
        for i in range(snap.r.size):
            yield (snap.t, float(snap.r[i]), float(snap.values[i]), float(norm[i]), float(u[i]))


SNAPSHOT_HEADER = ("t", "r", "M", "M_normalized", "u")


def write_snapshots_csv(report: SolveReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SNAPSHOT_HEADER)
        for row in snapshots_rows(report):
            w.writerow([repr(x) for x in row])


def write_manifest(report: SolveReport, path, extra: dict | None = None) -> None:
    data = report.to_dict()
    if extra:
        data.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
