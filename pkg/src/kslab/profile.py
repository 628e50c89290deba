"""Self-similar profile ``M(t, r) = t^(d/2-1) P(r / sqrt(t))``.

In ``y = r / sqrt(t)`` the profile ``P`` (mass) and ``U`` (density,
``P' = sigma_d y^(d-1) U``) satisfy

    U' = -(y/2 + q) U + ((d-2)/2) q,      q = P / (sigma_d y^(d-1)).

The profile is built by shooting from ``U(0) = a`` and, independently, by
rescaling a long-time solution of the mass PDE.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline, PchipInterpolator

from .model import MassField, ModelParams, RadialGrid, _readonly
from .poisson import density_field, density_from_mass

DEFAULT_Y0 = 1e-3
DEFAULT_H = 0.005
SERIES_TERMS = 12


class ShootingError(RuntimeError):
    """No bracket for the far-field condition, or the ODE integration failed."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class SelfSimilarProfile:
    y_nodes: np.ndarray
    M_values: np.ndarray
    U_values: np.ndarray
    a: float
    params: ModelParams
    phi: float = math.nan
    phi_raw: float = math.nan
    source: str = "shoot"
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("y_nodes", "M_values", "U_values"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        y = self.y_nodes
        if y.ndim != 1 or y.size != self.M_values.size or y.size != self.U_values.size:
            raise ValueError("profile arrays must share one length")
        if not np.all(np.diff(y) > 0):
            raise ValueError("y nodes must be increasing")

    @property
    def y_max(self) -> float:
        return float(self.y_nodes[-1])

    def mass_interpolant(self):
        """Cubic Hermite interpolant of ``P`` using ``P' = sigma_d y^(d-1) U``."""
        p = self.params
        dm = p.sigma_d * self.y_nodes ** (p.d - 1) * self.U_values
        return CubicHermiteSpline(self.y_nodes, self.M_values, dm)

    def mass_at(self, y):
        return self.mass_interpolant()(np.asarray(y, float))

    def density_interpolant(self):
        """Interpolant of ``U``.

        Shooting profiles satisfy the profile ODE at the nodes, so its right
        side supplies Hermite slopes; other profiles use monotone PCHIP.
        """
        if self.source != "shoot":
            return PchipInterpolator(self.y_nodes, self.U_values)
        p = self.params
        y = self.y_nodes
        q = np.zeros_like(y)
        q[1:] = self.M_values[1:] / (p.sigma_d * y[1:] ** (p.d - 1))
        du = -(0.5 * y + q) * self.U_values + 0.5 * (p.d - 2) * q
        return CubicHermiteSpline(y, self.U_values, du)

    def density_at(self, y):
        return self.density_interpolant()(np.asarray(y, float))

    def normalized(self) -> np.ndarray:
        """``P / (2 sigma_d y^(d-2))`` (0 at y = 0)."""
        p = self.params
        out = np.zeros_like(self.M_values)
        y = self.y_nodes
        pos = y > 0
        out[pos] = self.M_values[pos] / (2.0 * p.sigma_d * y[pos] ** (p.d - 2))
        return out

    def bound_violation(self) -> float:
        return max(0.0, float(np.max(self.normalized())) - self.params.epsilon)

    def consistency_error(self) -> float:
        """``max |P - sigma_d int_0^y U s^(d-1) ds|`` relative to ``max P``."""
        p = self.params
        y = self.y_nodes
        g = CubicSpline(y, p.sigma_d * self.U_values * y ** (p.d - 1)).antiderivative()
        integ = g(y) - g(y[0])
        return float(np.max(np.abs(integ - self.M_values)) / max(np.max(np.abs(self.M_values)), 1e-300))

    def to_dict(self) -> dict:
        return {"a": self.a, "phi": self.phi, "phi_raw": self.phi_raw, "source": self.source,
                "y_max": self.y_max, "n_nodes": int(self.y_nodes.size),
                "params": self.params.to_dict(), **self.info}


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------

def series_coefficients(d: int, a: float, n_terms: int = SERIES_TERMS) -> np.ndarray:
    """``u_k`` in ``U = sum u_k y^(2k)`` (and ``q = sum u_k y^(2k+1)/(d+2k)``)."""
    u = np.zeros(n_terms)
    u[0] = a
    for k in range(1, n_terms):
        conv = sum(u[j] * u[k - 1 - j] / (d + 2 * j) for j in range(k))
        u[k] = (-0.5 * u[k - 1] - conv + 0.5 * (d - 2) * u[k - 1] / (d + 2 * k - 2)) / (2 * k)
    return u


def series_start(params: ModelParams, a: float, y0: float, n_terms: int = SERIES_TERMS):
    """``(P(y0), U(y0))`` from the series; also the size of the last term used."""
    d, s = params.d, params.sigma_d
    u = series_coefficients(d, a, n_terms)
    k = np.arange(n_terms)
    U = float(np.sum(u * y0 ** (2 * k)))
    M = float(s * np.sum(u * y0 ** (2 * k + d) / (d + 2 * k)))
    last = abs(u[-1] * y0 ** (2 * n_terms - 2)) / max(abs(U), 1e-300)
    return M, U, last


def _rhs(params):
    d, s = params.d, params.sigma_d

    def f(y, z):
        M, U = z
        q = M / (s * y ** (d - 1))
        return [s * y ** (d - 1) * U, -(0.5 * y + q) * U + 0.5 * (d - 2) * q]

    return f


def default_nodes(y_max: float, h: float = DEFAULT_H) -> np.ndarray:
    n = max(4, int(round(y_max / h)))
    return np.linspace(0.0, y_max, n + 1)


def far_field_limit(params: ModelParams, y, M, y_lo: float | None = None) -> float:
    """Extrapolated ``lim P(y) / y^(d-2)`` from a fit ``A + B/y^2 + C/y^4``.

    The far-field expansion is
    ``P / y^(d-2) = A (1 - (d-2)(2 - A/sigma_d) / y^2 + O(y^-4))``, so the
    raw ratio at ``y = 20`` is biased by a few 1e-3.
    """
    y = np.asarray(y, float)
    M = np.asarray(M, float)
    y_hi = y[-1]
    y_lo = 0.5 * y_hi if y_lo is None else y_lo
    sel = y >= y_lo
    g = M[sel] / y[sel] ** (params.d - 2)
    X = np.vstack([np.ones(sel.sum()), y[sel] ** -2, y[sel] ** -4]).T
    coef, *_ = np.linalg.lstsq(X, g, rcond=None)
    return float(coef[0])


def shoot_profile(params: ModelParams, a: float, y_max: float = 20.0, *,
                  y0: float = DEFAULT_Y0, nodes=None, rtol: float = 1e-13,
                  far_field: str = "extrapolated") -> SelfSimilarProfile:
    """Integrate the profile ODE from the series at ``y0`` out to ``y_max``.

    ``phi`` is the far-field functional ``A / (2 sigma_d)`` with ``A`` the
    extrapolated limit of ``P / y^(d-2)`` (``far_field="extrapolated"``),
    or the plain ratio at ``y_max`` (``far_field="raw"``); both are stored.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not y_max > y0:
        raise ValueError("y_max must exceed y0")
    ys = default_nodes(y_max) if nodes is None else np.asarray(nodes, float)
    if ys[0] != 0.0:
        ys = np.concatenate([[0.0], ys])
    M0, U0, last = series_start(params, a, y0)
    inner = ys[(ys > 0) & (ys <= y0)]
    outer = ys[ys > y0]
    s = params.sigma_d
    scale = s * a * y_max ** params.d + 1.0

    def runaway(y, z):
        return 1e6 * scale - abs(z[0]) - abs(z[1]) * scale

    runaway.terminal = True
    sol = solve_ivp(_rhs(params), (y0, y_max), [M0, U0], method="DOP853", t_eval=outer,
                    rtol=rtol, atol=[1e-15 * s * a * y0 ** params.d, 1e-15 * a],
                    events=runaway)
    if sol.status != 0 or sol.t.size != outer.size:
        raise ShootingError(f"ODE integration stopped at y={sol.t[-1] if sol.t.size else y0:.4g} "
                            f"for a={a}: {sol.message}")
    M = np.empty_like(ys)
    U = np.empty_like(ys)
    M[0], U[0] = 0.0, a
    if inner.size:
        for i, y in enumerate(inner, start=1):
            M[i], U[i], _ = series_start(params, a, y)
    M[ys > y0] = sol.y[0]
    U[ys > y0] = sol.y[1]
    phi_raw = float(M[-1] / (2.0 * s * ys[-1] ** (params.d - 2)))
    A = far_field_limit(params, ys, M)
    phi = A / (2.0 * s) if far_field == "extrapolated" else phi_raw
    return SelfSimilarProfile(ys, M, U, float(a), params, phi, phi_raw, "shoot",
                              {"y0": y0, "series_tail": last, "far_field": far_field})


def ode_residual(profile: SelfSimilarProfile, window: tuple | None = None) -> float:
    """Centred-difference residual of the second-order mass ODE, relative to its largest term.

    Uses the five-point fourth-order stencils on uniform node spacing.
    """
    y = profile.y_nodes
    M = profile.M_values
    h = np.diff(y)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("ode_residual needs uniformly spaced nodes")
    h = h[0]
    d, s = profile.params.d, profile.params.sigma_d
    i = np.arange(2, y.size - 2)
    m1 = (M[i - 2] - 8 * M[i - 1] + 8 * M[i + 1] - M[i + 2]) / (12 * h)
    m2 = (-M[i - 2] + 16 * M[i - 1] - 30 * M[i] + 16 * M[i + 1] - M[i + 2]) / (12 * h * h)
    yi = y[i]
    terms = np.vstack([m2, 0.5 * yi * m1, -0.5 * (d - 2) * M[i], -(d - 1) / yi * m1,
                       M[i] * m1 / (s * yi ** (d - 1))])
    res = terms.sum(axis=0)
    lo, hi = window if window else (2 * y[1], 0.5 * y[-1])
    sel = (yi >= lo) & (yi <= hi)
    return float(np.max(np.abs(res[sel])) / np.max(np.abs(terms[:, sel])))


def match_profile(params: ModelParams, y_max: float = 20.0, tol: float = 1e-10, *,
                  a_lo: float | None = None, a_hi: float | None = None,
                  max_doublings: int = 40, continuation: bool = True, **shoot_kw) -> SelfSimilarProfile:
    """Find ``a*`` with ``phi(a*) = eps`` by bracketing and bisection.

    The bracket starts at ``[eps, 2 eps]`` and the upper end is doubled
    until ``phi`` exceeds ``eps``. If the bracket fails or ``phi`` is found
    non-monotone on the trace, continuation in ``eps`` from 0.05 is tried.
    ``eps = 1`` is attempted with a :class:`CriticalWarning`.
    """
    eps = params.epsilon
    params.check_construction()
    trace = []

    def phi(a):
        prof = shoot_profile(params, a, y_max, **shoot_kw)
        trace.append((float(a), float(prof.phi)))
        return prof.phi - eps, prof

    try:
        lo = eps if a_lo is None else a_lo
        f_lo, _ = phi(lo)
        if f_lo > 0:
            # a* >= eps is expected; walk down in case it is not
            while f_lo > 0 and lo > 1e-8:
                lo *= 0.5
                f_lo, _ = phi(lo)
        hi = 2.0 * lo if a_hi is None else a_hi
        f_hi, _ = phi(hi)
        n = 0
        while f_hi < 0:
            lo, f_lo = hi, f_hi
            hi *= 2.0
            n += 1
            if n > max_doublings:
                raise ShootingError("no bracket for phi(a) = eps", trace)
            f_hi, _ = phi(hi)
        if f_lo > 0 or f_hi < 0:
            raise ShootingError("no sign change in bracket", trace)
        best = None
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f_mid, prof = phi(mid)
            best = prof
            if abs(f_mid) <= tol or hi - lo <= 1e-15 * hi:
                break
            if f_mid < 0:
                lo = mid
            else:
                hi = mid
        if not _monotone(trace):
            raise ShootingError("phi(a) is not monotone on the trace", trace)
    except ShootingError as exc:
        if not continuation:
            raise
        return _continuation(params, y_max, tol, exc.trace, **shoot_kw)
    info = dict(best.info, phi_trace=trace, a_bracket=[lo, hi], residual=best.phi - eps)
    return SelfSimilarProfile(best.y_nodes, best.M_values, best.U_values, best.a, params,
                              best.phi, best.phi_raw, "shoot", info)


def _monotone(trace) -> bool:
    pts = sorted(trace)
    vals = [v for _, v in pts]
    return all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def _continuation(params, y_max, tol, trace, **shoot_kw):
    eps_target = params.epsilon
    a_guess = None
    prof = None
    steps = list(np.arange(0.05, eps_target, 0.05)) + [eps_target]
    for e in steps:
        p = ModelParams(params.d, float(e))
        lo = 0.5 * a_guess if a_guess else None
        hi = 2.0 * a_guess if a_guess else None
        prof = match_profile(p, y_max, tol, a_lo=lo, a_hi=hi, continuation=False, **shoot_kw)
        a_guess = prof.a
    info = dict(prof.info, continuation=True, failed_trace=trace)
    return SelfSimilarProfile(prof.y_nodes, prof.M_values, prof.U_values, prof.a, params,
                              prof.phi, prof.phi_raw, "shoot", info)


def linear_profile(params: ModelParams, y_max: float = 20.0, h: float = DEFAULT_H) -> SelfSimilarProfile:
    """Profile of the lower barrier (``lam = d-1``) at ``t = 1``: ``U(0) = eps`` exactly."""
    from .barrier import BarrierSpec, barrier_value

    spec = BarrierSpec.lower(params)
    y = default_nodes(y_max, h)
    M = barrier_value(spec, 1.0, y)
    field_like = _ProfileMass(params, y, M)
    U = density_from_mass(field_like)
    return SelfSimilarProfile(y, M, U, float(U[0]), params, source="linear")


@dataclass(frozen=True)
class _ProfileMass:
    params: ModelParams
    r: np.ndarray
    values: np.ndarray


def self_similar_fields(profile: SelfSimilarProfile, grid: RadialGrid, t: float):
    """``M(t, r) = t^(d/2-1) P(r/sqrt t)`` and ``u(t, r) = U(r/sqrt t)/t`` on ``grid``.

    Returns ``(MassField, DensityField)``; ``grid`` must lie inside
    ``sqrt(t) y_max``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    p = profile.params
    st = math.sqrt(t)
    y = grid.nodes / st
    if y[-1] > profile.y_max * (1 + 1e-12):
        raise ValueError("grid exceeds the profile range at this time")
    M = t ** (0.5 * p.d - 1.0) * profile.mass_at(y)
    u = profile.density_at(y) / t
    mass = MassField(grid, t, M, p)
    return mass, density_field(p, grid, t, u, M)


# ---------------------------------------------------------------------------
# extraction from PDE snapshots
# ---------------------------------------------------------------------------

def extract_profile(report, t_extract: float, y_grid=None) -> SelfSimilarProfile:
    """``P(y) = t^(1-d/2) M(t, sqrt(t) y)`` and ``U(y) = t u(t, sqrt(t) y)`` from a snapshot.

    Without ``y_grid`` the nodes are ``r_i / sqrt(t)``; otherwise the
    snapshot is resampled by monotone cubic interpolation.
    """
    snap = report.at(t_extract)
    p = snap.params
    st = math.sqrt(t_extract)
    r = snap.r
    u = density_from_mass(snap)
    y = r / st
    M = t_extract ** (1.0 - 0.5 * p.d) * snap.values
    U = t_extract * u
    if y_grid is not None:
        yg = np.asarray(y_grid, float)
        if yg[-1] > y[-1] * (1 + 1e-12) or yg[0] < 0:
            raise ValueError("extraction grid exceeds the data range")
        M = PchipInterpolator(y, M)(yg)
        U = PchipInterpolator(y, U)(yg)
        y = yg
    A = far_field_limit(p, y, M, y_lo=0.25 * y[-1])
    return SelfSimilarProfile(y, M, U, float(U[0]), p, A / (2.0 * p.sigma_d),
                              float(M[-1] / (2.0 * p.sigma_d * y[-1] ** (p.d - 2))), "extract",
                              {"t_extract": t_extract})


def weighted_distance(a: SelfSimilarProfile, b: SelfSimilarProfile, y_max: float | None = None) -> float:
    """``sup |P_a - P_b| / (2 sigma_d (1 + y^(d-2)))`` on ``a``'s nodes up to ``y_max``."""
    p = a.params
    top = min(a.y_max, b.y_max) if y_max is None else y_max
    y = a.y_nodes[a.y_nodes <= top]
    diff = np.abs(a.M_values[: y.size] - b.mass_at(y))
    return float(np.max(diff / (2.0 * p.sigma_d * (1.0 + y ** (p.d - 2)))))


# ---------------------------------------------------------------------------
# integrating factor and limits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratingFactor:
    y_star: float
    y_nodes: np.ndarray
    log_values: np.ndarray
    log_J: np.ndarray

    def __post_init__(self):
        for name in ("y_nodes", "log_values", "log_J"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def f_star(self) -> float:
        return math.exp(0.25 * self.y_star ** 2)

    def log_f_at(self, y):
        return np.interp(y, self.y_nodes, self.log_values)

    def int_sf(self, y_from: float, y_to: float) -> float:
        """``int_{y_from}^{y_to} s f(s) ds`` (endpoints interpolated in ``log J``)."""
        return _int_sf(self, y_from, y_to)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def integrating_factor(profile: SelfSimilarProfile, y_star: float) -> IntegratingFactor:
    """``f(y) = exp(y^2/4 - int_y^{y*} P / (sigma_d s^(d-1)) ds)`` on the profile nodes.

    ``Q(y) = int_0^y q`` comes from a cubic spline of ``q`` (``q(0) = 0``);
    ``J(y) = int_0^y s exp(s^2/4 + Q(s)) ds`` is accumulated in log form
    with six-point Gauss rules per interval, so ``f`` may exceed the double
    range at large ``y`` without harm.
    """
    p = profile.params
    y = profile.y_nodes
    if not y[0] < y_star <= y[-1]:
        raise ValueError("y_star must lie inside the profile range")
    q = np.zeros_like(y)
    pos = y > 0
    q[pos] = profile.M_values[pos] / (p.sigma_d * y[pos] ** (p.d - 1))
    if np.any(~np.isfinite(q)) or np.any(q < -1e-12):
        raise ValueError("P / (sigma_d y^(d-1)) is not integrable on this profile")
    spl = CubicSpline(y, q)
    Q = spl.antiderivative()
    Qy = Q(y)
    Qs = float(Q(y_star))
    logf = 0.25 * y * y - (Qs - Qy)
    a, b = y[:-1], y[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    s = mid[:, None] + half[:, None] * _GL_X[None, :]
    with np.errstate(divide="ignore"):
        lg = np.log(s) + 0.25 * s * s + Q(s) + np.log(half[:, None] * _GL_W[None, :])
    inc = np.logaddexp.reduce(lg, axis=1)
    logJ = np.concatenate([[-np.inf], np.logaddexp.accumulate(inc)])
    # f = e^(y^2/4 + Q(y) - Q(y*)), so int s f = J e^(-Q(y*))
    return IntegratingFactor(float(y_star), y, logf, logJ - Qs)


def explicit_U(profile: SelfSimilarProfile, factor: IntegratingFactor, index: int = 0) -> float:
    """Right side of ``U(y) - (d-2)/2 = (f(y*)/f(y))(U(y*) - (d-2)/2) + ((d-2)/(4 f(y))) int_y^{y*} s f``."""
    d = profile.params.d
    y = profile.y_nodes
    ys = factor.y_star
    Ustar = float(CubicSpline(y, profile.U_values)(ys))
    logfy = factor.log_values[index]
    ratio = math.exp(0.25 * ys * ys - logfy)
    tail = _int_sf(factor, y[index], ys)
    return 0.5 * (d - 2) + ratio * (Ustar - 0.5 * (d - 2)) + 0.25 * (d - 2) * tail * math.exp(-logfy)


def _int_sf(factor: IntegratingFactor, a: float, b: float) -> float:
    la = float(np.interp(a, factor.y_nodes, factor.log_J))
    lb = float(np.interp(b, factor.y_nodes, factor.log_J))
    if b >= a:
        return math.exp(lb) * -math.expm1(la - lb) if lb > -np.inf else 0.0
    return -math.exp(la) * -math.expm1(lb - la)


def uf_residual(profile: SelfSimilarProfile, factor: IntegratingFactor, window: tuple | None = None) -> float:
    """Centred-difference ``(U f)' - ((d-2)/2)(f' - (y/2) f)``, relative to ``|(U f)'| + |f'|``.

    Five-point fourth-order stencils on uniform nodes. Everything is divided
    by ``f`` at the centre node, so ``(Uf)'/f`` only needs the ratios
    ``f(y+kh)/f(y)`` and large ``f`` does not matter.
    """
    d = profile.params.d
    y = profile.y_nodes
    h = np.diff(y)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("uf_residual needs uniformly spaced nodes")
    h = h[0]
    U = profile.U_values
    lf = factor.log_values
    i = np.arange(2, y.size - 2)
    w = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    duf = np.zeros(i.size)
    df = np.zeros(i.size)
    for k, wk in zip(range(-2, 3), w):
        ratio = np.exp(lf[i + k] - lf[i])
        duf += wk * U[i + k] * ratio
        df += wk * ratio
    res = duf - 0.5 * (d - 2) * (df - 0.5 * y[i])
    lo, hi = window if window else (0.1, 0.5 * y[-1])
    sel = (y[i] >= lo) & (y[i] <= hi)
    scale = np.abs(duf[sel]) + np.abs(df[sel]) + 0.5 * y[i][sel]
    return float(np.max(np.abs(res[sel]) / scale))


@dataclass(frozen=True)
class LimitDiagnostics:
    U0_direct: float
    U0_mass_ratio: float
    U0_explicit: float
    U0_explicit_alt: float
    y_star_spread: float
    tail: float
    U_at_ymax: float
    anchors: tuple

    @property
    def U0_spread(self) -> float:
        vals = (self.U0_direct, self.U0_mass_ratio, self.U0_explicit)
        return max(vals) - min(vals)

    def to_dict(self) -> dict:
        return {"U0_direct": self.U0_direct, "U0_mass_ratio": self.U0_mass_ratio,
                "U0_explicit": self.U0_explicit, "U0_explicit_alt": self.U0_explicit_alt,
                "U0_spread": self.U0_spread, "y_star_spread": self.y_star_spread,
                "tail": self.tail, "U_at_ymax": self.U_at_ymax, "anchors": list(self.anchors)}


def u0_direct(profile: SelfSimilarProfile) -> float:
    """``U(0+)`` by Richardson extrapolation in ``y^2`` of ``U`` at the two smallest positive nodes."""
    y, U = profile.y_nodes, profile.U_values
    y1, y2 = y[1], y[2]
    w = y1 ** 2 / (y2 ** 2 - y1 ** 2)
    return float(U[1] - w * (U[2] - U[1]))


def u0_mass_ratio(profile: SelfSimilarProfile) -> float:
    """``U(0+)`` from ``d P / (sigma_d y^d)`` at the three smallest positive nodes (Richardson in ``y^2``)."""
    p = profile.params
    y = profile.y_nodes[1:4]
    g = p.d * profile.M_values[1:4] / (p.sigma_d * y ** p.d)
    X = np.vstack([np.ones(3), y ** 2, y ** 4]).T
    return float(np.linalg.solve(X, g)[0])


def profile_limits(profile: SelfSimilarProfile, factor: IntegratingFactor,
                   alt_y_star: float | None = None) -> LimitDiagnostics:
    """Three ``U(0+)`` estimates, the anchor independence and the tail ratio."""
    y = profile.y_nodes
    if y.size < 8 or y[1] > 0.1:
        raise ValueError("insufficient resolution near y = 0")
    alt = alt_y_star if alt_y_star is not None else (2.0 if factor.y_star != 2.0 else 1.0)
    factor_alt = integrating_factor(profile, alt)
    e1 = explicit_U(profile, factor, 0)
    e2 = explicit_U(profile, factor_alt, 0)
    ym = y[-1]
    tail = _int_sf(factor, factor.y_star, ym) / (2.0 * math.exp(factor.log_values[-1]))
    return LimitDiagnostics(u0_direct(profile), u0_mass_ratio(profile), e1, e2, abs(e1 - e2),
                            tail, float(profile.U_values[-1]), (factor.y_star, alt))


def write_profile_csv(profile: SelfSimilarProfile, path, factor: IntegratingFactor | None = None) -> None:
    """Columns ``y, M, U, f, ode_residual``; ``f`` is ``exp(log f)`` (may be inf far out)."""
    y = profile.y_nodes
    M = profile.M_values
    p = profile.params
    res = np.full_like(y, np.nan)
    h = np.diff(y)
    if y.size > 4 and np.allclose(h, h[0], rtol=1e-9, atol=0):
        i = np.arange(2, y.size - 2)
        m1 = (M[i - 2] - 8 * M[i - 1] + 8 * M[i + 1] - M[i + 2]) / (12 * h[0])
        m2 = (-M[i - 2] + 16 * M[i - 1] - 30 * M[i] + 16 * M[i + 1] - M[i + 2]) / (12 * h[0] ** 2)
        yi = y[i]
        res[i] = (m2 + 0.5 * yi * m1 - 0.5 * (p.d - 2) * M[i] - (p.d - 1) / yi * m1
                  + M[i] * m1 / (p.sigma_d * yi ** (p.d - 1)))
    with np.errstate(over="ignore"):
        f = factor.values if factor is not None else np.full_like(y, np.nan)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("y", "M", "U", "f", "residual"))
        for row in zip(y, M, profile.U_values, f, res):
            w.writerow([repr(float(x)) for x in row])


def write_profile_json(profile: SelfSimilarProfile, path, limits: LimitDiagnostics | None = None,
                       extra: dict | None = None) -> None:
    data = {"profile": _jsonable(profile.to_dict())}
    if limits is not None:
        data["limits"] = limits.to_dict()
    if extra:
        data.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
