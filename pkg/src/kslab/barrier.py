"""Explicit solutions of the linear Bessel-drift problem ``m_t = m_rr - (lam/r) m_r``.

With datum ``m(0, r) = c0 r^(d-2)`` the solution is

    m(t, r) = P c0 t^(-kappa) r^(lam+1) e^(-z) int_0^1 s^(d/2-1) (1-s)^(kappa-1) e^(z s) ds

where ``kappa = (lam - d + 3)/2``, ``z = r^2/4t`` and
``P = 2^(d-3-lam) / Gamma(kappa)``. ``lam = d-1`` gives the lower barrier,
``lam = d-1-2 eps`` the upper one.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, RadialGrid, _readonly
from .specfun import (DEFAULT_QUAD, QuadratureSpec, beta_exp_integral, beta_fn,
                      bessel_ie, integrate)

EPS_CLAMP = 1.0 - 1e-3


class BarrierClampWarning(UserWarning):
    """The requested epsilon was clamped for barrier evaluation."""


@dataclass(frozen=True)
class BarrierSpec:
    lam: float
    c0: float
    params: ModelParams

    def __post_init__(self):
        d = self.params.d
        if not (d - 3 < self.lam <= d - 1):
            raise ValueError(f"need d-3 < lam <= d-1, got lam={self.lam} for d={d}")
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")

    @classmethod
    def upper(cls, params: ModelParams) -> "BarrierSpec":
        """``lam = d-1-2 eps``, ``c0 = eps 2 sigma_d``; eps is clamped to ``1 - 1e-3``."""
        eps = params.epsilon
        if eps > EPS_CLAMP:
            warnings.warn(f"epsilon={eps} clamped to {EPS_CLAMP} for the upper barrier",
                          BarrierClampWarning, stacklevel=2)
            eps = EPS_CLAMP
        return cls(params.d - 1 - 2.0 * eps, params.chandrasekhar_coefficient(), params)

    @classmethod
    def lower(cls, params: ModelParams) -> "BarrierSpec":
        return cls(float(params.d - 1), params.chandrasekhar_coefficient(), params)

    @property
    def kappa(self) -> float:
        return 0.5 * (self.lam - self.params.d + 3)

    @property
    def prefactor(self) -> float:
        """``2^(d-3-lam) c0 / Gamma(kappa)``."""
        return 2.0 ** (self.params.d - 3 - self.lam) * self.c0 / math.gamma(self.kappa)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "c0": self.c0, "d": self.params.d,
                "epsilon": self.params.epsilon}


@dataclass(frozen=True)
class BarrierField:
    spec: BarrierSpec
    t: float
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))


def barrier_value(spec: BarrierSpec, t: float, r, quad: QuadratureSpec = DEFAULT_QUAD):
    """``m(t, r)`` for scalar or array ``r``."""
    if not t > 0:
        raise ValueError("barrier needs t > 0")
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0):
        raise ValueError("r must be nonnegative")
    flat = np.atleast_1d(ra).ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    if np.any(pos):
        rp = flat[pos]
        z = rp * rp / (4.0 * t)
        d = spec.params.d
        j = beta_exp_integral(0.5 * d, spec.kappa, z, quad)
        out[pos] = spec.prefactor * t ** (-spec.kappa) * rp ** (spec.lam + 1.0) * j
    out = out.reshape(ra.shape)
    return float(out) if ra.ndim == 0 else out


def barrier_field(spec: BarrierSpec, t: float, grid: RadialGrid,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> BarrierField:
    return BarrierField(spec, t, grid, barrier_value(spec, t, grid.nodes, quad))


def barrier_kernel(spec: BarrierSpec, t: float, r, s):
    """Transition kernel ``p(t; r, s)`` of the Bessel-drift semigroup.

    Written as ``(1/2t) e^(-(r-s)^2/4t) (rs)^nu Ie_nu(rs/2t)`` with the scaled
    Bessel function, so it stays finite for large ``rs/2t``.
    """
    if not t > 0:
        raise ValueError("kernel needs t > 0")
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    nu = 0.5 * (spec.lam + 1.0)
    rs = r * s
    val = np.exp(-(r - s) ** 2 / (4.0 * t)) * rs ** nu * bessel_ie(nu, rs / (2.0 * t)) / (2.0 * t)
    return float(val) if np.ndim(val) == 0 else val


def barrier_from_kernel(spec: BarrierSpec, t: float, r: float,
                        quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int_0^inf p(t; r, s) c0 s^(d-2-lam) ds``, an independent route to ``m(t, r)``."""
    d = spec.params.d
    width = 2.0 * math.sqrt(t)
    hi = r + 20.0 * width

    def f(s):
        return barrier_kernel(spec, t, r, s) * spec.c0 * s ** (d - 2 - spec.lam)

    pieces = [(0.0, r), (r, hi)] if r > 0 else [(0.0, hi)]
    return sum(integrate(f, a, b, quad) for a, b in pieces)


def g_diagnostic(spec: BarrierSpec, t: float, y_star: float,
                 quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int_0^(sqrt(t) y*) m(t, r) / r^(d-1) dr``.

    The integrand is ``P c0 t^(-kappa) r^(2 kappa - 1) J(r^2/4t)`` with the
    bounded factor ``J``; the substitution ``w = r^(2 kappa)`` leaves
    ``J`` alone on a finite interval, so the endpoint singularity for
    small ``kappa`` never reaches the quadrature. ``m / r^(d-1)`` is
    integrable exactly when ``lam > d-3``.
    """
    if not t > 0:
        raise ValueError("g_diagnostic needs t > 0")
    if not spec.lam > spec.params.d - 3:
        raise ValueError("m / r^(d-1) is not integrable at 0 for lam <= d-3")
    if y_star <= 0:
        return 0.0
    k2 = 2.0 * spec.kappa
    half_d = 0.5 * spec.params.d
    w_max = (math.sqrt(t) * y_star) ** k2

    def f(w):
        r = np.asarray(w, dtype=float) ** (1.0 / k2)
        return beta_exp_integral(half_d, spec.kappa, r * r / (4.0 * t), quad)

    return spec.prefactor * t ** (-spec.kappa) / k2 * integrate(f, 0.0, w_max, quad)


def g_bound(spec: BarrierSpec, y_star: float) -> float:
    """``P c0 B(d/2, kappa) y*^(2 kappa) / (2 kappa)`` bounding :func:`g_diagnostic`."""
    k2 = 2.0 * spec.kappa
    return spec.prefactor * beta_fn(0.5 * spec.params.d, spec.kappa) * y_star ** k2 / k2
