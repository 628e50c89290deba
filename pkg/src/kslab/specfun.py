"""Special functions and quadrature.

Gamma and Beta come from the standard library's ``math.gamma`` /
``math.lgamma``. The modified Bessel function, the tanh-sinh and
Gauss-Kronrod rules and the integral form of 1F1 are implemented here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DOUBLE_EXPONENTIAL = "double-exponential"
ADAPTIVE = "adaptive-subdivision"


class QuadratureError(RuntimeError):
    """A quadrature rule failed to reach its tolerance within the depth limit."""


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = DOUBLE_EXPONENTIAL
    abs_tol: float = 1e-300
    rel_tol: float = 1e-13
    max_depth: int = 10

    def __post_init__(self):
        if self.scheme not in (DOUBLE_EXPONENTIAL, ADAPTIVE):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "abs_tol": self.abs_tol,
                "rel_tol": self.rel_tol, "max_depth": self.max_depth}


DEFAULT_QUAD = QuadratureSpec()


# ---------------------------------------------------------------------------
# Gamma / Beta
# ---------------------------------------------------------------------------

def gamma_fn(x: float) -> float:
    if not x > 0:
        raise ValueError(f"gamma_fn needs x > 0, got {x!r}")
    return math.gamma(x)


def gammaln(x: float) -> float:
    if not x > 0:
        raise ValueError(f"gammaln needs x > 0, got {x!r}")
    return math.lgamma(x)


def betaln(x: float, y: float) -> float:
    if not (x > 0 and y > 0):
        raise ValueError("beta needs positive arguments")
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def beta_fn(x: float, y: float) -> float:
    if not (x > 0 and y > 0):
        raise ValueError("beta needs positive arguments")
    if x + y < 170.0:
        return math.gamma(x) * math.gamma(y) / math.gamma(x + y)
    return math.exp(betaln(x, y))


def gamma_ratio(a: float, b: float) -> float:
    """``Gamma(a) / Gamma(b)`` without intermediate overflow."""
    return math.exp(math.lgamma(a) - math.lgamma(b))


# ---------------------------------------------------------------------------
# Modified Bessel function of the first kind
# ---------------------------------------------------------------------------

SERIES_LIMIT = 30.0
_MAX_TERMS = 2000


def _ie_series(nu, x):
    # exp(-x) * sum_m (x/2)^(2m+nu) / (m! Gamma(m+nu+1)), all terms positive
    out = np.zeros_like(x)
    pos = x > 0
    if not np.any(pos):
        if nu == 0:
            out[:] = 1.0
        return out
    xp = x[pos]
    q = 0.25 * xp * xp
    term = np.exp(nu * np.log(0.5 * xp) - math.lgamma(nu + 1.0) - xp)
    total = term.copy()
    m = 0
    active = np.ones(xp.shape, dtype=bool)
    while np.any(active) and m < _MAX_TERMS:
        m += 1
        term = term * q / (m * (m + nu))
        total += term
        active = (term > 1e-17 * total) | (m < q)
    out[pos] = total
    if nu == 0:
        out[~pos] = 1.0
    return out


def _ie_asymptotic(nu, x):
    # exp(-x) I_nu(x) ~ (2 pi x)^(-1/2) sum_k (-1)^k a_k(nu) / x^k
    mu = 4.0 * nu * nu
    total = np.ones_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, 80):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        grow = np.abs(nxt) >= np.abs(prev)
        done |= grow
        add = ~done
        total = np.where(add, total + nxt, total)
        prev = np.where(add, nxt, prev)
        term = nxt
        done |= np.abs(nxt) < 1e-17 * np.abs(total)
        if np.all(done):
            break
    return total / np.sqrt(2.0 * np.pi * x)


def bessel_ie(nu: float, x):
    """Exponentially scaled ``exp(-x) I_nu(x)`` for ``nu >= 0, x >= 0``.

    Power series up to ``x = 30`` (and wherever ``x < 2 nu^2``, where the
    large-argument expansion is poor), the Hankel expansion beyond.
    """
    if nu < 0:
        raise ValueError("bessel_ie needs nu >= 0")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("bessel_ie needs x >= 0")
    flat = np.atleast_1d(xa).ravel()
    out = np.empty_like(flat)
    asym = (flat > SERIES_LIMIT) & (flat >= 2.0 * nu * nu)
    if np.any(~asym):
        out[~asym] = _ie_series(float(nu), flat[~asym])
    if np.any(asym):
        out[asym] = _ie_asymptotic(float(nu), flat[asym])
    out = out.reshape(np.shape(xa))
    return float(out) if xa.ndim == 0 else out


def bessel_i(nu: float, x):
    """``I_nu(x)``; raises ``OverflowError`` when the value is not representable."""
    ie = bessel_ie(nu, x)
    xa = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        val = np.asarray(ie) * np.exp(xa)
    if not np.all(np.isfinite(val)):
        raise OverflowError("I_nu(x) overflows double precision; use bessel_ie")
    return float(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def _softplus(u):
    return np.logaddexp(0.0, u)


def _ts_terms(f, a, b, t):
    u = np.pi * np.sinh(t)
    s = np.exp(-_softplus(-u))
    sc = np.exp(-_softplus(u))
    width = b - a
    x = np.where(t < 0, a + width * s, b - width * sc)
    w = width * np.pi * np.cosh(t) * s * sc
    inside = (x > a) & (x < b) & (w > 0)
    out = np.zeros_like(t)
    if np.any(inside):
        out[inside] = w[inside] * np.asarray(f(x[inside]), dtype=float)
    return out


def tanh_sinh(f, a: float, b: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """Integrate vectorised ``f`` over ``[a, b]``; returns ``(value, error)``.

    Handles integrable algebraic singularities at the endpoints. The
    trapezoid step is halved until successive levels agree to tolerance.
    """
    if b == a:
        return 0.0, 0.0
    if b < a:
        v, e = tanh_sinh(f, b, a, quad)
        return -v, e
    T = 3.0
    while T < 6.5:
        edge = _ts_terms(f, a, b, np.array([-T, T]))
        core = _ts_terms(f, a, b, np.linspace(-1.0, 1.0, 9))
        scale = np.max(np.abs(core)) + 1e-300
        if np.max(np.abs(edge)) < 1e-18 * scale:
            break
        T += 0.5
    h = 0.5
    k = np.arange(-int(T / h), int(T / h) + 1)
    total = np.sum(_ts_terms(f, a, b, k * h))
    value = h * total
    err = np.inf
    for _ in range(quad.max_depth):
        h *= 0.5
        k = np.arange(-int(T / h), int(T / h) + 1)
        k = k[k % 2 != 0]
        total += np.sum(_ts_terms(f, a, b, k * h))
        new = h * total
        err = abs(new - value)
        value = new
        if err <= max(quad.abs_tol, quad.rel_tol * abs(value)):
            return float(value), float(err)
    raise QuadratureError(f"tanh-sinh did not converge on [{a}, {b}] (last change {err:.3e})")


def tanh_sinh_log01(logf, quad: QuadratureSpec = DEFAULT_QUAD, rows: int = 1):
    """Integrate ``exp(logf(log s, log(1-s), s))`` over ``[0, 1]``.

    Working with logarithms keeps endpoint factors such as ``(1-s)^(-0.99)``
    or ``exp(z s)`` with large ``|z|`` exact near the ends, where ``1 - s``
    itself would round to zero. ``logf`` may return shape ``(rows, n)`` for a
    batch of integrands; the result then has length ``rows``.
    """
    def logterms(t):
        u = np.pi * np.sinh(t)
        ls = -_softplus(-u)
        l1s = -_softplus(u)
        lw = np.log(np.pi * np.cosh(t)) + ls + l1s
        val = np.asarray(logf(ls, l1s, np.exp(ls)), dtype=float)
        return np.broadcast_to(val + lw, (rows, t.size))

    probe = np.arange(-24.0, 24.0 + 1e-9, 0.25)
    lp = logterms(probe)
    peak = np.max(lp, axis=1)
    keep = lp > (peak[:, None] - 50.0)
    lo = probe[np.argmax(keep.any(axis=0))] - 0.5
    hi = probe[len(probe) - 1 - np.argmax(keep.any(axis=0)[::-1])] + 0.5
    h = 0.125
    k = np.arange(math.floor(lo / h), math.ceil(hi / h) + 1)
    total = np.sum(np.exp(logterms(k * h) - peak[:, None]), axis=1)
    value = h * total
    for _ in range(quad.max_depth):
        h *= 0.5
        k = np.arange(math.floor(lo / h), math.ceil(hi / h) + 1)
        k = k[k % 2 != 0]
        total = total + np.sum(np.exp(logterms(k * h) - peak[:, None]), axis=1)
        new = h * total
        err = np.abs(new - value)
        value = new
        tol = np.maximum(quad.abs_tol * np.exp(-peak), quad.rel_tol * np.abs(value))
        if np.all(err <= tol):
            break
    else:
        raise QuadratureError("log tanh-sinh did not converge")
    return value, peak


# Gauss-Kronrod 7/15 nodes and weights
_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.000000000000000000000000000000000])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_X15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def gauss_kronrod(f, a: float, b: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """Globally adaptive G7/K15 on a finite interval; returns ``(value, error)``.

    Intervals are bisected where the Kronrod-Gauss difference is largest;
    ``quad.max_depth`` caps the bisection depth of any single interval.
    """
    def rule(lo, hi):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = c[:, None] + h[:, None] * _X15[None, :]
        fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        k = h * (fx @ _W15)
        g = h * (fx @ _W7)
        return k, np.abs(k - g)

    lo = np.array([a], float)
    hi = np.array([b], float)
    depth = np.array([0])
    vals, errs = rule(lo, hi)
    for _ in range(10000):
        total = vals.sum()
        err = errs.sum()
        if err <= max(quad.abs_tol, quad.rel_tol * abs(total)):
            return float(total), float(err)
        cut = errs >= 0.25 * errs.max()
        if np.any(depth[cut] >= max(quad.max_depth, 30)):
            break
        mid = 0.5 * (lo[cut] + hi[cut])
        nlo = np.concatenate([lo[~cut], lo[cut], mid])
        nhi = np.concatenate([hi[~cut], mid, hi[cut]])
        ndepth = np.concatenate([depth[~cut], depth[cut] + 1, depth[cut] + 1])
        v2, e2 = rule(np.concatenate([lo[cut], mid]), np.concatenate([mid, hi[cut]]))
        vals = np.concatenate([vals[~cut], v2])
        errs = np.concatenate([errs[~cut], e2])
        lo, hi, depth = nlo, nhi, ndepth
    raise QuadratureError(f"Gauss-Kronrod did not converge on [{a}, {b}]")


def integrate(f, a: float, b: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Definite integral of a vectorised integrand with the scheme in ``quad``."""
    if quad.scheme == ADAPTIVE:
        return gauss_kronrod(f, a, b, quad)[0]
    return tanh_sinh(f, a, b, quad)[0]


# ---------------------------------------------------------------------------
# Confluent hypergeometric function
# ---------------------------------------------------------------------------

def beta_exp_integral(alpha: float, beta: float, z, quad: QuadratureSpec = DEFAULT_QUAD):
    """``int_0^1 s^(alpha-1) (1-s)^(beta-1) exp(z (s - 1)) ds`` for an array of ``z``.

    The ``exp(-z)`` shift keeps the integrand below one for ``z > 0``.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("need alpha > 0 and beta > 0 for convergence")
    za = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    col = za[:, None]

    def logf(ls, l1s, s):
        return (alpha - 1.0) * ls + (beta - 1.0) * l1s - col * np.exp(l1s)

    val, peak = tanh_sinh_log01(logf, quad, rows=za.size)
    out = val * np.exp(peak)
    return float(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))


def hyp1f1(a: float, b: float, z, quad: QuadratureSpec = DEFAULT_QUAD):
    """Kummer's 1F1(a; b; z) from its Euler integral, valid for ``0 < a < b``."""
    if not (0.0 < a < b):
        raise ValueError(f"integral representation needs 0 < a < b, got a={a}, b={b}")
    za = np.asarray(z, dtype=float)
    integral = beta_exp_integral(a, b - a, za, quad)
    return np.exp(za - betaln(a, b - a)) * integral if za.ndim else \
        math.exp(float(za) - betaln(a, b - a)) * integral


def hyp1f1_series(a: float, b: float, z: float, tol: float = 1e-17, max_terms: int = 5000) -> float:
    """Power series of 1F1 for ``b > 0``; Kummer-transformed for ``z < 0``.

    Every summed term is positive when ``a > 0`` and ``z >= 0`` (or
    ``b - a > 0`` and ``z < 0`` after the transform), so there is no
    cancellation in those regimes.
    """
    if b <= 0:
        raise ValueError("series needs b > 0")
    if z < 0 and b - a > 0:
        return math.exp(z) * hyp1f1_series(b - a, b, -z, tol, max_terms)
    term = 1.0
    total = 1.0
    for m in range(max_terms):
        term *= (a + m) * z / ((b + m) * (m + 1))
        total += term
        if abs(term) < tol * abs(total) and m > abs(z):
            return total
    raise QuadratureError("1F1 series did not converge")


# ---------------------------------------------------------------------------
# Gaussian-Bessel moment identity
# ---------------------------------------------------------------------------

def _log_majorant(beta, p, q):
    def ell(s):
        return (beta - 1.0) * np.log(s) - p * s * s + q * s
    return ell


def gaussian_tail_cutoff(beta: float, p: float, q: float, rel: float = 1e-20) -> float:
    """Cutoff ``s*`` beyond which ``s^(beta-1) exp(-p s^2) I_nu(q s)`` is negligible.

    Uses ``I_nu(x) <= exp(x)`` and the log-concave tail bound
    ``int_{s*}^inf e^ell <= e^ell(s*) / |ell'(s*)|``; the bound is pushed
    below ``rel`` times the majorant's peak mass.
    """
    ell = _log_majorant(beta, p, q)
    c = q / (2.0 * p)
    width = 1.0 / math.sqrt(p)
    grid = np.linspace(max(c, 1e-3 * width) * 1e-3, c + 10.0 * width, 400)
    peak = float(np.max(ell(grid)))
    ref = peak + math.log(width)
    s = max(c, width)
    for _ in range(2000):
        slope = (beta - 1.0) / s - 2.0 * p * s + q
        concave = -(beta - 1.0) / s**2 - 2.0 * p < 0
        if slope < 0 and concave and ell(s) - math.log(-slope) < ref + math.log(rel):
            return s
        s += 0.5 * width
    raise QuadratureError("could not bound the Gaussian tail")


def prudnikov_lhs(beta: float, nu: float, p: float, q: float,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int_0^inf s^(beta-1) exp(-p s^2) I_nu(q s) ds`` by truncated quadrature."""
    if not (p > 0 and q > 0):
        raise ValueError("need p > 0 and q > 0")
    if nu < 0:
        raise ValueError("need nu >= 0")
    if beta + nu <= 0:
        raise ValueError("integral diverges at 0 for beta + nu <= 0")
    s_star = gaussian_tail_cutoff(beta, p, q)
    c = q / (2.0 * p)
    ell = _log_majorant(beta, p, q)
    shift = float(np.max(ell(np.linspace(1e-6 * s_star, s_star, 400))))

    def f(s):
        return np.exp(ell(s) - shift) * bessel_ie(nu, q * s)

    pieces = [(0.0, c), (c, s_star)] if 0.0 < c < s_star else [(0.0, s_star)]
    total = sum(integrate(f, lo, hi, quad) for lo, hi in pieces)
    return total * math.exp(shift)


def prudnikov_rhs(beta: float, nu: float, p: float, q: float,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Closed form of :func:`prudnikov_lhs` through 1F1((beta+nu)/2; nu+1; q^2/4p).

    The Euler integral is used when ``(beta+nu)/2 < nu+1``; otherwise the
    (positive-term) power series.
    """
    a = 0.5 * (beta + nu)
    b = nu + 1.0
    z = q * q / (4.0 * p)
    f11 = hyp1f1(a, b, z, quad) if a < b else hyp1f1_series(a, b, z)
    logpre = (nu * math.log(q) - (nu + 1.0) * math.log(2.0) - a * math.log(p)
              + math.lgamma(a) - math.lgamma(b))
    return math.exp(logpre) * f11
