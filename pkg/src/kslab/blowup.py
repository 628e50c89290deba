"""Nonexistence threshold ``C(d)`` and the classification of ``(d, eps)``.

    C(d) = (16 / Gamma(d/2)) int_0^inf e^(-rho^2) rho^(d+1) / (2(d-2) + 4 rho^2) drho

Initial data ``eps u_C`` with ``eps > C(d)`` admit no local solution. The
constant is bracketed by explicit Gamma-function bounds

    1 < (2/(d-1)) G^2 < C(d) < sqrt(2/(d-2)) G < (d-1)/(d-2) <= 2,

``G = Gamma((d+1)/2) / Gamma(d/2)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .specfun import (ADAPTIVE, QuadratureError, QuadratureSpec, gamma_ratio, gammaln,
                      gauss_kronrod)

THRESHOLD_QUAD = QuadratureSpec(scheme=ADAPTIVE, rel_tol=1e-12, max_depth=30)
TABLE_HEADER = ("d", "lower", "C", "upper_1", "upper_2")

SUBCRITICAL = "subcritical-exists"
CRITICAL = "critical"
INDETERMINATE = "indeterminate"
NONEXISTENT = "nonexistent"


@dataclass(frozen=True)
class ThresholdResult:
    """``C(d)`` with its four bounds and the quadrature error estimate."""

    d: int
    C_value: float
    lower_bound: float
    upper_bound_1: float
    upper_bound_2: float
    quad_error: float
    tail_bound: float = 0.0

    def chain(self) -> tuple:
        return (1.0, self.lower_bound, self.C_value, self.upper_bound_1, self.upper_bound_2)

    def chain_holds(self, margin: float = 0.0) -> bool:
        """Strict chain ``1 < lower < C < upper_1 < upper_2 <= 2`` with ``margin`` between links."""
        c = self.chain()
        strict = all(c[k + 1] - c[k] > margin for k in range(len(c) - 1))
        return strict and self.upper_bound_2 <= 2.0

    def min_gap(self) -> float:
        c = self.chain()
        return min(c[k + 1] - c[k] for k in range(len(c) - 1))

    def row(self) -> tuple:
        return (self.d, self.lower_bound, self.C_value, self.upper_bound_1, self.upper_bound_2)

    def to_dict(self) -> dict:
        return {"d": self.d, "C": self.C_value, "lower": self.lower_bound,
                "upper_1": self.upper_bound_1, "upper_2": self.upper_bound_2,
                "quad_error": self.quad_error, "tail_bound": self.tail_bound,
                "chain_ok": self.chain_holds()}


def _g(d: int) -> float:
    return gamma_ratio(0.5 * (d + 1), 0.5 * d)


def lower_bound(d: int) -> float:
    return 2.0 / (d - 1) * _g(d) ** 2


def upper_bound_1(d: int) -> float:
    return math.sqrt(2.0 / (d - 2)) * _g(d)


def upper_bound_2(d: int) -> float:
    return (d - 1) / (d - 2)


def tail_cutoff(d: int) -> float:
    """``rho* = sqrt(d/2) + 12``."""
    return math.sqrt(0.5 * d) + 12.0


def _check_dim(d) -> int:
    if isinstance(d, bool) or int(d) != d or d < 3:
        raise ValueError(f"need an integer d >= 3, got {d!r}")
    return int(d)


def _weighted(d: int, power: float, denom):
    """Integrand ``e^(-rho^2) rho^power / denom(rho)`` scaled by ``1/Gamma(d/2)`` in log space."""
    shift = gammaln(0.5 * d)

    def f(rho):
        rho = np.asarray(rho, float)
        with np.errstate(divide="ignore"):
            logv = power * np.log(rho) - rho * rho - shift
        return np.exp(logv) / denom(rho)

    return f


def _quad_split(f, d: int, hi: float, quad: QuadratureSpec):
    peak = math.sqrt(0.5 * d)
    v1, e1 = gauss_kronrod(f, 0.0, peak, quad)
    v2, e2 = gauss_kronrod(f, peak, hi, quad)
    return v1 + v2, e1 + e2


def gaussian_tail(d: int, power: float, rho_star: float) -> float:
    """Bound on ``int_{rho*}^inf e^(-rho^2) rho^power / Gamma(d/2)``.

    The log-integrand is concave with slope ``power/rho - 2 rho`` that is
    negative past ``rho*``, so the tail is at most value over |slope|.
    """
    slope = power / rho_star - 2.0 * rho_star
    if slope >= 0:
        raise ValueError("cutoff is not past the integrand peak")
    log_v = power * math.log(rho_star) - rho_star ** 2 - gammaln(0.5 * d)
    return math.exp(log_v) / -slope


def compute_threshold(d: int, quad: QuadratureSpec = THRESHOLD_QUAD,
                      rho_star: float | None = None) -> ThresholdResult:
    """``C(d)`` by adaptive Gauss-Kronrod on ``[0, rho*]`` plus a Gaussian tail bound.

    Raises
    ------
    ValueError
        For ``d < 3`` or non-integer ``d``.
    QuadratureError
        If the quadrature or the tail bound misses the tolerance.
    """
    d = _check_dim(d)
    hi = tail_cutoff(d) if rho_star is None else float(rho_star)
    f = _weighted(d, d + 1.0, lambda rho: 2.0 * (d - 2) + 4.0 * rho * rho)
    val, err = _quad_split(f, d, hi, quad)
    # denominator >= 4 rho^2 on the tail
    tail = gaussian_tail(d, d - 1.0, hi) / 4.0
    if tail > 0.01 * quad.rel_tol * val:
        raise QuadratureError(f"tail bound {tail:.3e} too large for d={d}")
    return ThresholdResult(d, 16.0 * val, lower_bound(d), upper_bound_1(d), upper_bound_2(d),
                           16.0 * (err + tail), 16.0 * tail)


def classify(d: int, eps: float, threshold: ThresholdResult | None = None) -> str:
    """Place ``eps`` relative to 1 and ``C(d)``; the band ``(1, C(d)]`` stays indeterminate."""
    d = _check_dim(d)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if eps < 1.0:
        return SUBCRITICAL
    if eps == 1.0:
        return CRITICAL
    c = (threshold or compute_threshold(d)).C_value
    return INDETERMINATE if eps <= c else NONEXISTENT


def mean_inequality_check(d: int, quad: QuadratureSpec = THRESHOLD_QUAD) -> tuple[float, float]:
    """``(I, J)`` where ``J`` uses the AM-GM lower bound ``4 sqrt(2(d-2)) rho`` of the denominator.

    ``I <= J`` must hold.
    """
    d = _check_dim(d)
    hi = tail_cutoff(d)
    f = _weighted(d, d + 1.0, lambda rho: 2.0 * (d - 2) + 4.0 * rho * rho)
    c = 4.0 * math.sqrt(2.0 * (d - 2))
    g = _weighted(d, float(d), lambda rho: c)
    return _quad_split(f, d, hi, quad)[0], _quad_split(g, d, hi, quad)[0]


def cauchy_check(d: int, quad: QuadratureSpec = THRESHOLD_QUAD) -> tuple[float, float]:
    """``(lhs, rhs)`` of ``(int w rho^d)^2 <= (int w rho^(d+1)/D)(int w rho^(d-1) D)``, ``w = e^(-rho^2)``."""
    d = _check_dim(d)
    hi = tail_cutoff(d)

    def den(rho):
        return 2.0 * (d - 2) + 4.0 * rho * rho

    a = _quad_split(_weighted(d, float(d), lambda rho: 1.0), d, hi, quad)[0]
    b = _quad_split(_weighted(d, d + 1.0, den), d, hi, quad)[0]
    c = _quad_split(_weighted(d, d - 1.0, lambda rho: 1.0 / den(rho)), d, hi, quad)[0]
    return a * a, b * c


def threshold_table(dims, quad: QuadratureSpec = THRESHOLD_QUAD) -> list[ThresholdResult]:
    return [compute_threshold(d, quad) for d in dims]


def write_table_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_HEADER)
        for res in results:
            w.writerow([res.d] + [repr(float(x)) for x in res.row()[1:]])
