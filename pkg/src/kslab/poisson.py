"""Radial Poisson identities and residuals of the density equation.

For a radial density the potential gradient is ``psi_r = -M / (sigma_d r^(d-1))``
and ``u = M_r / (sigma_d r^(d-1))``. The radial density equation is

    u_t - u_rr - ((d-1)/r) u_r - u^2 - u_r (1/r^(d-1)) int_0^r u s^(d-1) ds = 0

and its integrated (mass) form is the mass-distribution PDE.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MassField, ModelParams, RadialGrid, _readonly


@dataclass(frozen=True)
class DensityField:
    grid: RadialGrid
    t: float
    values: np.ndarray
    psi_r: np.ndarray
    params: ModelParams
    mass: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "psi_r", _readonly(self.psi_r))
        if self.mass is not None:
            object.__setattr__(self, "mass", _readonly(self.mass))

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes


def _weights(r):
    """Three-point nonuniform first/second derivative weights on interior nodes."""
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    s = hm + hp
    d1 = (-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s))
    d2 = (2.0 / (hm * s), -2.0 / (hm * hp), 2.0 / (hp * s))
    return d1, d2


def diff1(r, f):
    """Second-order first derivative on a nonuniform grid (one-sided at the ends)."""
    r = np.asarray(r, float)
    f = np.asarray(f, float)
    out = np.empty_like(f)
    (a, b, c), _ = _weights(r)
    out[1:-1] = a * f[:-2] + b * f[1:-1] + c * f[2:]
    for end, idx in ((0, (0, 1, 2)), (-1, (-1, -2, -3))):
        x0, x1, x2 = r[list(idx)]
        f0, f1, f2 = f[list(idx)]
        h1, h2 = x1 - x0, x2 - x0
        out[end] = (f1 - f0) * h2 / (h1 * (h2 - h1)) - (f2 - f0) * h1 / (h2 * (h2 - h1))
    return out


def diff2(r, f):
    """Second derivative on interior nodes (ends are NaN)."""
    r = np.asarray(r, float)
    f = np.asarray(f, float)
    _, (a, b, c) = _weights(r)
    out = np.full_like(f, np.nan)
    out[1:-1] = a * f[:-2] + b * f[1:-1] + c * f[2:]
    return out


def _origin_extrapolate(r, v):
    """Value at ``r = 0`` of a function even in ``r`` from nodes 1 and 2."""
    w = r[1] ** 2 / (r[2] ** 2 - r[1] ** 2)
    return v[1] - w * (v[2] - v[1])


def density_from_mass(field: MassField, limiter: bool = False, regular: bool = True) -> np.ndarray:
    """``u = M_r / (sigma_d r^(d-1))`` on the nodes of ``field``.

    Parameters
    ----------
    field : MassField
    limiter : bool
        Clip the density at zero (used for exports; residual tests keep it off).
    regular : bool
        Treat ``M`` as regular at the origin. Then ``v = M / (sigma_d r^d)``
        is smooth and even, and ``u = d v + r v'`` avoids differentiating
        ``r^d`` with a stencil that cannot resolve it. With ``False`` the
        plain derivative of ``M`` is used, which suits singular fields such
        as the Chandrasekhar mass.
    """
    p = field.params
    r = field.r
    m = field.values
    u = np.empty_like(m)
    if regular:
        v = np.empty_like(m)
        v[1:] = m[1:] / (p.sigma_d * r[1:] ** p.d)
        v[0] = _origin_extrapolate(r, v)
        u = p.d * v + r * diff1(r, v)
        u[0] = p.d * v[0]
    else:
        dm = diff1(r, m)
        u[1:] = dm[1:] / (p.sigma_d * r[1:] ** (p.d - 1))
        u[0] = p.d * _origin_extrapolate(r, np.concatenate(([0.0], m[1:] / (p.sigma_d * r[1:] ** p.d))))
    if limiter:
        u = np.maximum(u, 0.0)
    return u


def potential_gradient(field: MassField, limiter: bool = False, regular: bool = True) -> DensityField:
    """``psi_r = -M / (sigma_d r^(d-1))`` with ``psi_r(0) = 0``, plus the density."""
    p = field.params
    r = field.r
    psi = np.zeros_like(r)
    psi[1:] = -field.values[1:] / (p.sigma_d * r[1:] ** (p.d - 1))
    u = density_from_mass(field, limiter, regular)
    return DensityField(field.grid, field.t, u, psi, p, field.values)


def density_field(params: ModelParams, grid: RadialGrid, t: float, u, mass) -> DensityField:
    """Density with a known mass function, e.g. from a self-similar profile."""
    r = grid.nodes
    psi = np.zeros_like(r)
    psi[1:] = -np.asarray(mass)[1:] / (params.sigma_d * r[1:] ** (params.d - 1))
    return DensityField(grid, t, np.asarray(u, float), psi, params, np.asarray(mass, float))


def spatial_u_operator(density: DensityField) -> np.ndarray:
    """``u_rr + ((d-1)/r) u_r + u^2 - u_r psi_r`` on interior nodes (NaN at ends).

    The transport term is written with ``psi_r``; it equals
    ``+u_r (1/r^(d-1)) int_0^r u s^(d-1) ds`` because
    ``psi_r = -(1/r^(d-1)) int_0^r u s^(d-1) ds``.
    """
    d = density.params.d
    r = density.r
    u = density.values
    ur = diff1(r, u)
    urr = diff2(r, u)
    out = np.full_like(u, np.nan)
    ri = r[1:-1]
    out[1:-1] = (urr[1:-1] + (d - 1) / ri * ur[1:-1] + u[1:-1] ** 2
                 - ur[1:-1] * density.psi_r[1:-1])
    return out


def radial_equation_residual(density: DensityField, density_prev: DensityField, dt: float | None = None,
                             *, normalize: bool = True, window: tuple[float, float] | None = None,
                             midpoint: bool = True) -> float:
    """Max interior residual of the radial density equation between two snapshots.

    ``u_t`` is the two-snapshot difference; with ``midpoint`` the spatial
    terms are averaged over both snapshots (second order in ``dt``),
    otherwise they are taken from ``density`` alone. ``normalize`` divides
    the residual by ``max(|u_t|, |u_rr|, u^2)`` on the window so that the
    result is a relative size.
    """
    if density_prev is None:
        raise ValueError("two snapshots are required")
    if dt is None:
        dt = density.t - density_prev.t
    if not dt > 0:
        raise ValueError("snapshots must be ordered in time")
    if density.values.shape != density_prev.values.shape:
        raise ValueError("snapshots must share the grid")
    ut = (density.values - density_prev.values) / dt
    op = spatial_u_operator(density)
    if midpoint:
        op = 0.5 * (op + spatial_u_operator(density_prev))
    res = ut - op
    r = density.r
    mask = np.zeros(r.shape, bool)
    mask[1:-1] = True
    if window is not None:
        mask &= (r >= window[0]) & (r <= window[1])
    if not np.any(mask):
        return 0.0
    val = float(np.max(np.abs(res[mask])))
    if normalize:
        scale = float(np.max(np.abs(ut[mask])) + np.max(np.abs(diff2(r, density.values)[mask]))
                      + np.max(density.values[mask] ** 2))
        return val / scale if scale > 0 else val
    return val


def mass_operator(params: ModelParams, r, m) -> np.ndarray:
    """``M_rr - ((d-1)/r) M_r + M M_r / (sigma_d r^(d-1))`` on interior nodes."""
    d, s = params.d, params.sigma_d
    r = np.asarray(r, float)
    m = np.asarray(m, float)
    mr = diff1(r, m)
    mrr = diff2(r, m)
    out = np.full_like(m, np.nan)
    ri = r[1:-1]
    out[1:-1] = mrr[1:-1] - (d - 1) / ri * mr[1:-1] + m[1:-1] * mr[1:-1] / (s * ri ** (d - 1))
    return out


def mass_equation_residual(params: ModelParams, r, m, m_prev, dt: float) -> np.ndarray:
    """Midpoint residual ``(M - M_prev)/dt - (A M + A M_prev)/2`` of the mass PDE."""
    return (np.asarray(m) - np.asarray(m_prev)) / dt - 0.5 * (
        mass_operator(params, r, m) + mass_operator(params, r, m_prev))


def chandrasekhar_residual(params: ModelParams, grid: RadialGrid, window: tuple[float, float] | None = None) -> float:
    """Max interior residual of the mass operator on ``M = 2 sigma_d r^(d-2)``.

    Relative to ``|M_rr| + |(d-1) M_r / r|``. Three-point stencils are exact
    on ``r^(d-2)`` for ``d = 3, 4``; for larger ``d`` the relative error at
    the first nodes does not shrink under refinement (it depends on ``r/h``
    only), so convergence is measured on a ``window`` away from the origin.
    """
    r = grid.nodes
    m = 2.0 * params.sigma_d * r ** (params.d - 2)
    ri = r[1:-1]
    res = mass_operator(params, r, m)[1:-1]
    scale = np.abs(diff2(r, m)[1:-1]) + np.abs((params.d - 1) / ri * diff1(r, m)[1:-1])
    rel = np.abs(res) / np.maximum(scale, 1e-300)
    if window is not None:
        rel = rel[(ri >= window[0]) & (ri <= window[1])]
    return float(np.max(rel)) if rel.size else 0.0


def sign_identity_gap(field: MassField, regular: bool = True) -> float:
    """``max |-u_r (1/r^(d-1)) int_0^r u s^(d-1) ds - u_r psi_r|`` with both sides from ``M``."""
    p = field.params
    dens = potential_gradient(field, regular=regular)
    r = field.r
    ur = diff1(r, dens.values)
    integral = np.zeros_like(r)
    integral[1:] = field.values[1:] / (p.sigma_d * r[1:] ** (p.d - 1))
    return float(np.max(np.abs(-ur * integral - ur * dens.psi_r)))


def formulation_gap(mass: MassField, mass_prev: MassField, density: DensityField,
                    density_prev: DensityField, window: tuple[float, float] | None = None) -> float:
    """Gap between the two formulations of one time interval.

    The density residual equals ``d/dr`` of the mass residual divided by
    ``sigma_d r^(d-1)``; both are the midpoint residuals of the same
    snapshots. Returned relative to the size of the density residual's
    largest term on the window.
    """
    p = mass.params
    r = mass.r
    dt = mass.t - mass_prev.t
    rm = mass_equation_residual(p, r, mass.values, mass_prev.values, dt)
    ut = (density.values - density_prev.values) / dt
    op = 0.5 * (spatial_u_operator(density) + spatial_u_operator(density_prev))
    ru = ut - op
    mask = np.zeros(r.shape, bool)
    mask[2:-2] = True
    if window is not None:
        mask &= (r >= window[0]) & (r <= window[1])
    rm_filled = np.where(np.isnan(rm), 0.0, rm)
    from_mass = np.zeros_like(r)
    from_mass[1:] = diff1(r, rm_filled)[1:] / (p.sigma_d * r[1:] ** (p.d - 1))
    gap = np.abs(from_mass - ru)[mask]
    scale = np.max(np.abs(ut[mask])) + np.max(np.abs(op[mask]))
    return float(np.max(gap) / scale)
