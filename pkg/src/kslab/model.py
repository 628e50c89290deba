"""Problem parameters, radial grids, truncated data and the Chandrasekhar reference.

Everything here is an immutable value object. Arrays held by the dataclasses
are made read-only on construction.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

# Stretch of the default geometric grid: r_1 = 1e-4 r_max when n = 2048.
DEFAULT_FIRST_FRACTION = 1e-4
DEFAULT_REFERENCE_NODES = 2048


class CriticalWarning(UserWarning):
    """Raised for epsilon = 1, where no existence guarantee applies."""


def sphere_measure(d: int) -> float:
    """Surface measure of the unit sphere in R^d, ``2 pi^(d/2) / Gamma(d/2)``."""
    if int(d) != d or d <= 0:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class ModelParams:
    d: int
    epsilon: float
    sigma_d: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ValueError(f"d must be an integer >= 3, got {self.d!r}")
        if not (0.0 < self.epsilon):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "sigma_d", sphere_measure(self.d))

    @property
    def regime(self) -> str:
        if self.epsilon < 1.0:
            return "subcritical"
        if self.epsilon == 1.0:
            return "critical"
        return "supercritical"

    @property
    def critical(self) -> bool:
        return self.epsilon == 1.0

    def check_construction(self) -> None:
        """Warn (critical) or raise (supercritical) when outside 0 < eps < 1."""
        if self.epsilon > 1.0:
            raise ValueError(f"construction requires epsilon <= 1, got {self.epsilon}")
        if self.critical:
            warnings.warn("epsilon = 1 is critical: exploratory run, no guarantees",
                          CriticalWarning, stacklevel=2)

    def chandrasekhar_coefficient(self) -> float:
        """``eps * 2 sigma_d``, the far-field coefficient of the homogeneous datum."""
        return 2.0 * self.epsilon * self.sigma_d

    def to_dict(self) -> dict:
        return {"d": self.d, "epsilon": self.epsilon, "sigma_d": self.sigma_d,
                "regime": self.regime}


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RadialGrid:
    """Nodes ``0 = r_0 < ... < r_N = r_max``.

    ``kind`` is ``"uniform"`` or ``"geometric"``; for the latter ``ratio`` is
    the constant quotient of consecutive spacings.
    """

    nodes: np.ndarray
    kind: str = "custom"
    ratio: float = 1.0

    def __post_init__(self):
        r = _readonly(self.nodes)
        if r.ndim != 1 or r.size < 3:
            raise ValueError("a grid needs at least three nodes")
        if r[0] != 0.0:
            raise ValueError("grid must start at r = 0")
        if not np.all(np.diff(r) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", r)

    @classmethod
    def uniform(cls, r_max: float, n: int) -> "RadialGrid":
        return cls(np.linspace(0.0, r_max, n + 1), "uniform", 1.0)

    @classmethod
    def geometric(cls, r_max: float, n: int, *, stretch: float | None = None,
                  first: float | None = None) -> "RadialGrid":
        """Spacings growing by ``q = exp(stretch / n)`` from the origin.

        A fixed ``stretch`` is a fixed smooth map ``r(xi)`` of a uniform
        ``xi`` grid, so refining ``n`` at constant stretch gives clean
        convergence orders. ``first`` instead prescribes ``r_1``. With neither,
        the stretch is the one that puts ``r_1`` at ``1e-4 r_max`` for 2048
        intervals.
        """
        if stretch is not None and first is not None:
            raise ValueError("give either stretch or first, not both")
        if first is not None:
            if not 0.0 < first < r_max / n:
                raise ValueError("first spacing must lie in (0, r_max/n)")
            q = brentq(lambda q: r_max * (q - 1.0) / (q ** n - 1.0) - first,
                       1.0 + 1e-14, 2.0 ** (700.0 / n))
            stretch = n * math.log(q)
        if stretch is None:
            stretch = default_stretch()
        if stretch < 1e-9:
            # the map is uniform to rounding; expm1 ratios would underflow
            return cls.uniform(r_max, n)
        q = math.exp(stretch / n)
        i = np.arange(n + 1)
        r = r_max * np.expm1(stretch * i / n) / math.expm1(stretch)
        r[-1] = r_max
        return cls(r, "geometric", q)

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def n(self) -> int:
        return self.nodes.size - 1

    @property
    def stretch(self) -> float:
        return self.n * math.log(self.ratio)

    def scaled(self, factor: float) -> "RadialGrid":
        return RadialGrid(self.nodes * factor, self.kind, self.ratio)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "r_max": self.r_max,
                "ratio": self.ratio, "r_1": float(self.nodes[1])}


def default_stretch() -> float:
    n = DEFAULT_REFERENCE_NODES
    target = DEFAULT_FIRST_FRACTION

    def gap(beta):
        return math.expm1(beta / n) / math.expm1(beta) - target

    return brentq(gap, 1e-6, 50.0)


@dataclass(frozen=True)
class MassField:
    """Snapshot ``M(t, r_i)`` of the radial mass distribution."""

    grid: RadialGrid
    t: float
    values: np.ndarray
    params: ModelParams

    def __post_init__(self):
        v = _readonly(self.values)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid")
        object.__setattr__(self, "values", v)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def normalized(self) -> np.ndarray:
        """``M / (2 sigma_d r^(d-2))``, with the r = 0 entry set to 0."""
        r = self.r
        out = np.zeros_like(r)
        out[1:] = self.values[1:] / (2.0 * self.params.sigma_d * r[1:] ** (self.params.d - 2))
        return out

    def bound_violation(self) -> float:
        """Largest excess of the normalized field over epsilon (0 if none)."""
        return max(0.0, float(np.max(self.normalized()[1:])) - self.params.epsilon)

    def monotonicity_violation(self) -> float:
        """Largest decrease between neighbouring nodes (0 if nondecreasing)."""
        return max(0.0, -float(np.min(np.diff(self.values))))

    def check(self, tol: float = 1e-6) -> list[str]:
        problems = []
        if self.values[0] != 0.0:
            problems.append("M(t,0) != 0")
        if self.monotonicity_violation() > tol:
            problems.append("M not nondecreasing")
        if self.bound_violation() > tol:
            problems.append("M exceeds eps*2*sigma_d*r^(d-2)")
        return problems


def chandrasekhar_mass(params: ModelParams, r):
    """Mass inside radius ``r`` of the singular stationary density, ``2 sigma_d r^(d-2)``.

    The value does not involve epsilon; the Chandrasekhar profile is the
    epsilon = 1 member of the homogeneous family.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    out = 2.0 * params.sigma_d * r ** (params.d - 2)
    return float(out) if out.ndim == 0 else out


def chandrasekhar_field(params: ModelParams, grid: RadialGrid, t: float = 0.0) -> MassField:
    return MassField(grid, t, chandrasekhar_mass(params, grid.nodes), params)


@dataclass(frozen=True)
class TruncationSpec:
    """Truncation level ``K`` and the plateau radius ``R(K)``."""

    K: float
    R_K: float

    @classmethod
    def build(cls, params: ModelParams, K: float) -> "TruncationSpec":
        if not K > 0:
            raise ValueError(f"K must be positive, got {K!r}")
        d, s = params.d, params.sigma_d
        return cls(float(K), math.sqrt(2.0 * (d - 2) * s / d) / K)

    def density(self, params: ModelParams, r):
        """Truncated initial density: plateau ``eps d K^2 / sigma_d`` then ``eps 2(d-2)/r^2``."""
        r = np.asarray(r, dtype=float)
        d, s, eps = params.d, params.sigma_d, params.epsilon
        plateau = eps * d * self.K ** 2 / s
        with np.errstate(divide="ignore"):
            tail = eps * 2.0 * (d - 2) / r ** 2
        out = np.where(r <= self.R_K, plateau, tail)
        return float(out) if out.ndim == 0 else out


def truncated_initial_mass(params: ModelParams, trunc: TruncationSpec, r):
    """Mass of the truncated datum inside radius ``r``.

    ``eps K^2 r^d`` on the plateau and
    ``eps 2 sigma_d r^(d-2) - eps (4 sigma_d / d) R(K)^(d-2)`` outside; the
    constant offset makes the two branches meet at ``R(K)``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    d, s, eps = params.d, params.sigma_d, params.epsilon
    R = trunc.R_K
    inner = eps * trunc.K ** 2 * r ** d
    outer = eps * 2.0 * s * r ** (d - 2) - eps * (4.0 * s / d) * R ** (d - 2)
    out = np.where(r <= R, inner, outer)
    return float(out) if out.ndim == 0 else out


def truncated_field(params: ModelParams, trunc: TruncationSpec, grid: RadialGrid) -> MassField:
    return MassField(grid, 0.0, truncated_initial_mass(params, trunc, grid.nodes), params)


def radial_concentration(field: MassField) -> float:
    """``max_{r_i > 0} r_i^(2-d) M_i`` over the grid nodes."""
    r = field.r[1:]
    return float(np.max(field.values[1:] * r ** (2 - field.params.d)))
