"""Hot loops of the mass-distribution solver.

Each kernel exists twice: a loop version compiled with numba and a
vectorised numpy/scipy version. ``advance`` dispatches on
:data:`kslab._backend.USE_NUMBA`. Both paths implement the same scheme, so
results agree to rounding (they are not bitwise identical).

The operator on interior node ``i`` is split as

    (A M)_i = (L M)_i + c_i (D1 M)_i,      L = D2 - (lam/r) D1,

with ``lam = d - 1`` and ``c = M* / (sigma r^(d-1))`` (lagged) in the
nonlinear mode, and ``c = 0`` in linear-drift mode. Away from the origin
``L`` and ``D1`` are the usual three-point stencils. At nodes with
``r_i < fit * r_1`` (a fixed number of origin spacings) both are replaced by fitted stencils that
are exact on ``{1, r^p, r^(p+2)}``, ``p = lam + 1``, the leading terms of
a regular solution near ``r = 0``. The fitted ``L`` has positive
off-diagonals; ``c D1`` switches to a forward difference where the centred
one would make a sub-diagonal negative, so the implicit matrix stays an
M-matrix.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_banded

from ._backend import USE_NUMBA, njit

MODE_NONLINEAR = 0
MODE_LINEAR = 1

STATUS_OK = 0
STATUS_CAP = 1
STATUS_NONFINITE = 2
STATUS_NEWTON = 3

DEFAULT_FIT = 40.0


# ---------------------------------------------------------------------------
# loop kernels (numba)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _pow_m1(x, p):
    # x^p - 1 without cancellation for x near 1
    if x == 0.0:
        return -1.0
    return math.expm1(p * math.log(x))


@njit(cache=True, nogil=True)
def _fitted(rm, r0, rp, lam):
    """Fitted weights ``(Lm, L0, Lp, Dm, D0, Dp)`` at ``r0``."""
    p = lam + 1.0
    xm = rm / r0
    xp = rp / r0
    am = _pow_m1(xm, p)
    ap = _pow_m1(xp, p)
    bm = _pow_m1(xm, p + 2.0)
    bp = _pow_m1(xp, p + 2.0)
    det = am * bp - ap * bm
    t = 2.0 * (p + 2.0) / (r0 * r0)
    lm = -ap * t / det
    lp = am * t / det
    # D1 targets: p / r0 on r^p, (p + 2) / r0 on r^(p+2)
    g1 = p / r0
    g2 = (p + 2.0) / r0
    dm = (g1 * bp - ap * g2) / det
    dp = (am * g2 - g1 * bm) / det
    return lm, -(lm + lp), lp, dm, -(dm + dp), dp


@njit(cache=True, nogil=True)
def _assemble_nb(r, c, lam, fit, lo, di, up, l1, d1, u1):
    n = r.shape[0] - 1
    edge = fit * (r[1] - r[0])
    for i in range(1, n):
        hm = r[i] - r[i - 1]
        hp = r[i + 1] - r[i]
        if r[i] < edge:
            lm, l0, lp, cl, cd, cu = _fitted(r[i - 1], r[i], r[i + 1], lam)
        else:
            s = hm + hp
            cl = -hp / (hm * s)
            cu = hm / (hp * s)
            cd = -(cl + cu)
            a = lam / r[i]
            lm = 2.0 / (hm * s) - a * cl
            lp = 2.0 / (hp * s) - a * cu
            l0 = -2.0 / (hm * hp) - a * cd
        ci = c[i]
        if lm + ci * cl < 0.0 or lp + ci * cu < 0.0:
            if ci >= 0.0:
                cl = 0.0
                cd = -1.0 / hp
                cu = 1.0 / hp
            else:
                cl = -1.0 / hm
                cd = 1.0 / hm
                cu = 0.0
        l1[i] = cl
        d1[i] = cd
        u1[i] = cu
        lo[i] = lm + ci * cl
        di[i] = l0 + ci * cd
        up[i] = lp + ci * cu


@njit(cache=True, nogil=True)
def _thomas_nb(a, b, c, rhs, out):
    """Solve a tridiagonal system; ``a`` sub-, ``b`` main, ``c`` super-diagonal."""
    n = b.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    if b[0] == 0.0:
        return False
    cp[0] = c[0] / b[0]
    dp[0] = rhs[0] / b[0]
    for i in range(1, n):
        den = b[i] - a[i] * cp[i - 1]
        if den == 0.0:
            return False
        cp[i] = c[i] / den
        dp[i] = (rhs[i] - a[i] * dp[i - 1]) / den
    out[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return True


@njit(cache=True, nogil=True)
def _coef_nb(r, field, d, sigma, mode, c):
    n = r.shape[0] - 1
    for i in range(1, n):
        if mode == 1:
            c[i] = 0.0
        else:
            c[i] = field[i] / (sigma * r[i] ** (d - 1.0))


@njit(cache=True, nogil=True)
def _advance_nb(r, m, m_prev, dt, dt_prev, n_steps, d, sigma, lam, mode,
                bdf2, newton, m_outer, cap, fit, stats):
    n = r.shape[0] - 1
    npts = n + 1
    lam_eff = lam if mode == 1 else d - 1.0
    lo = np.zeros(npts)
    di = np.zeros(npts)
    up = np.zeros(npts)
    l1 = np.zeros(npts)
    d1 = np.zeros(npts)
    u1 = np.zeros(npts)
    c = np.zeros(npts)
    sa = np.zeros(npts)
    sb = np.zeros(npts)
    sc = np.zeros(npts)
    rhs = np.zeros(npts)
    star = np.zeros(npts)
    new = np.zeros(npts)
    delta = np.zeros(npts)
    for step in range(n_steps):
        use2 = bdf2 and dt_prev > 0.0
        if use2:
            w = dt / dt_prev
            c0 = (1.0 + 2.0 * w) / (1.0 + w)
            for i in range(npts):
                rhs[i] = (1.0 + w) * m[i] - w * w / (1.0 + w) * m_prev[i]
                star[i] = (1.0 + w) * m[i] - w * m_prev[i]
        else:
            c0 = 1.0
            for i in range(npts):
                rhs[i] = m[i]
                star[i] = m[i]
        _coef_nb(r, star, d, sigma, mode, c)
        _assemble_nb(r, c, lam_eff, fit, lo, di, up, l1, d1, u1)
        sa[0] = 0.0
        sb[0] = 1.0
        sc[0] = 0.0
        rhs[0] = 0.0
        sa[n] = 0.0
        sb[n] = 1.0
        sc[n] = 0.0
        rhs[n] = m_outer
        for i in range(1, n):
            sa[i] = -dt * lo[i]
            sb[i] = c0 - dt * di[i]
            sc[i] = -dt * up[i]
        if not _thomas_nb(sa, sb, sc, rhs, new):
            return STATUS_NONFINITE, step
        if newton and mode == 0:
            converged = False
            for it in range(30):
                _coef_nb(r, new, d, sigma, mode, c)
                _assemble_nb(r, c, lam_eff, fit, lo, di, up, l1, d1, u1)
                scale = 0.0
                for i in range(1, n):
                    am = lo[i] * new[i - 1] + di[i] * new[i] + up[i] * new[i + 1]
                    res = c0 * new[i] - rhs[i] - dt * am
                    grad = (l1[i] * new[i - 1] + d1[i] * new[i] + u1[i] * new[i + 1]) / (
                        sigma * r[i] ** (d - 1.0))
                    sa[i] = -dt * lo[i]
                    sb[i] = c0 - dt * (di[i] + grad)
                    sc[i] = -dt * up[i]
                    star[i] = -res
                    if abs(new[i]) > scale:
                        scale = abs(new[i])
                star[0] = 0.0
                star[n] = 0.0
                if not _thomas_nb(sa, sb, sc, star, delta):
                    return STATUS_NONFINITE, step
                dmax = 0.0
                for i in range(npts):
                    new[i] += delta[i]
                    if abs(delta[i]) > dmax:
                        dmax = abs(delta[i])
                stats[1] += 1
                if dmax <= 1e-14 * (scale + 1.0):
                    converged = True
                    break
            if not converged:
                return STATUS_NEWTON, step
        peak = 0.0
        for i in range(npts):
            if not np.isfinite(new[i]):
                return STATUS_NONFINITE, step
            if i > 0:
                q = new[i] / (sigma * r[i] ** d)
                if q > peak:
                    peak = q
        for i in range(npts):
            m_prev[i] = m[i]
            m[i] = new[i]
        dt_prev = dt
        stats[0] += 1
        if peak > cap:
            return STATUS_CAP, step + 1
    return STATUS_OK, n_steps


# ---------------------------------------------------------------------------
# vectorised kernels (numpy / scipy)
# ---------------------------------------------------------------------------

def _fitted_np(rm, r0, rp, lam):
    p = lam + 1.0
    with np.errstate(divide="ignore"):
        lxm = np.log(rm / r0)
    lxp = np.log(rp / r0)
    am = np.expm1(p * lxm)
    ap = np.expm1(p * lxp)
    bm = np.expm1((p + 2.0) * lxm)
    bp = np.expm1((p + 2.0) * lxp)
    det = am * bp - ap * bm
    t = 2.0 * (p + 2.0) / (r0 * r0)
    lm = -ap * t / det
    lp = am * t / det
    g1 = p / r0
    g2 = (p + 2.0) / r0
    dm = (g1 * bp - ap * g2) / det
    dp = (am * g2 - g1 * bm) / det
    return lm, -(lm + lp), lp, dm, -(dm + dp), dp


def _assemble_np(r, c, lam, fit):
    rm, r0, rp = r[:-2], r[1:-1], r[2:]
    hm = r0 - rm
    hp = rp - r0
    s = hm + hp
    cl = -hp / (hm * s)
    cu = hm / (hp * s)
    cd = -(cl + cu)
    a = lam / r0
    lm = 2.0 / (hm * s) - a * cl
    lp = 2.0 / (hp * s) - a * cu
    l0 = -2.0 / (hm * hp) - a * cd
    near = r0 < fit * (r[1] - r[0])
    if np.any(near):
        f = _fitted_np(rm[near], r0[near], rp[near], lam)
        for arr, val in zip((lm, l0, lp, cl, cd, cu), f):
            arr[near] = val
    ci = c[1:-1]
    bad = (lm + ci * cl < 0.0) | (lp + ci * cu < 0.0)
    fwd = bad & (ci >= 0.0)
    back = bad & (ci < 0.0)
    cl = np.where(fwd, 0.0, np.where(back, -1.0 / hm, cl))
    cd = np.where(fwd, -1.0 / hp, np.where(back, 1.0 / hm, cd))
    cu = np.where(fwd, 1.0 / hp, np.where(back, 0.0, cu))
    return lm + ci * cl, l0 + ci * cd, lp + ci * cu, (cl, cd, cu)


def _coef_np(r, field, d, sigma, mode):
    c = np.zeros_like(r)
    if mode != MODE_LINEAR:
        c[1:-1] = field[1:-1] / (sigma * r[1:-1] ** (d - 1.0))
    return c


def _banded(sub, main, sup, rhs):
    ab = np.empty((3, main.size))
    ab[0, 1:] = sup[:-1]
    ab[0, 0] = 0.0
    ab[1] = main
    ab[2, :-1] = sub[1:]
    ab[2, -1] = 0.0
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _advance_np(r, m, m_prev, dt, dt_prev, n_steps, d, sigma, lam, mode,
                bdf2, newton, m_outer, cap, fit, stats):
    n = r.size - 1
    lam_eff = lam if mode == MODE_LINEAR else d - 1.0
    ri_pow = sigma * r[1:] ** (d - 1.0)
    rd = sigma * r[1:] ** d
    for step in range(n_steps):
        if bdf2 and dt_prev > 0.0:
            w = dt / dt_prev
            c0 = (1.0 + 2.0 * w) / (1.0 + w)
            rhs = (1.0 + w) * m - w * w / (1.0 + w) * m_prev
            star = (1.0 + w) * m - w * m_prev
        else:
            c0 = 1.0
            rhs = m.copy()
            star = m
        lo, di, up, _ = _assemble_np(r, _coef_np(r, star, d, sigma, mode), lam_eff, fit)
        sub = np.zeros(n + 1)
        main = np.ones(n + 1)
        sup = np.zeros(n + 1)
        sub[1:-1] = -dt * lo
        main[1:-1] = c0 - dt * di
        sup[1:-1] = -dt * up
        rhs = rhs.copy()
        rhs[0] = 0.0
        rhs[n] = m_outer
        try:
            new = _banded(sub, main, sup, rhs)
        except (np.linalg.LinAlgError, ValueError):
            return STATUS_NONFINITE, step
        if newton and mode == MODE_NONLINEAR:
            for _ in range(30):
                lo, di, up, (cl, cd, cu) = _assemble_np(
                    r, _coef_np(r, new, d, sigma, mode), lam_eff, fit)
                am = lo * new[:-2] + di * new[1:-1] + up * new[2:]
                res = c0 * new[1:-1] - rhs[1:-1] - dt * am
                grad = (cl * new[:-2] + cd * new[1:-1] + cu * new[2:]) / ri_pow[:-1]
                sub[1:-1] = -dt * lo
                main[1:-1] = c0 - dt * (di + grad)
                sup[1:-1] = -dt * up
                g = np.zeros(n + 1)
                g[1:-1] = -res
                delta = _banded(sub, main, sup, g)
                new = new + delta
                stats[1] += 1
                if np.max(np.abs(delta)) <= 1e-14 * (np.max(np.abs(new)) + 1.0):
                    break
            else:
                return STATUS_NEWTON, step
        if not np.all(np.isfinite(new)):
            return STATUS_NONFINITE, step
        peak = np.max(new[1:] / rd)
        m_prev[:] = m
        m[:] = new
        dt_prev = dt
        stats[0] += 1
        if peak > cap:
            return STATUS_CAP, step + 1
    return STATUS_OK, n_steps


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def advance(r, m, m_prev, dt, dt_prev, n_steps, *, d, sigma, lam=0.0,
            mode=MODE_NONLINEAR, bdf2=True, newton=False, m_outer=0.0,
            cap=np.inf, fit=DEFAULT_FIT, stats=None, use_numba=None):
    """Advance ``m`` in place by ``n_steps`` steps of size ``dt``.

    ``m_prev`` holds the previous time level (BDF2 history) and is updated in
    place as well; ``dt_prev <= 0`` means no history, so the first step is
    backward Euler. ``fit = 0`` disables the fitted near-origin stencils.
    Returns ``(status, steps_taken)``.
    """
    if stats is None:
        stats = np.zeros(2, dtype=np.int64)
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _advance_nb if use_numba else _advance_np
    status, done = fn(np.ascontiguousarray(r, dtype=np.float64), m, m_prev, float(dt),
                      float(dt_prev), int(n_steps), float(d), float(sigma), float(lam),
                      int(mode), bool(bdf2), bool(newton), float(m_outer), float(cap),
                      float(fit), stats)
    return int(status), int(done)


def assemble(r, c, lam, fit=DEFAULT_FIT, use_numba=None):
    """Tridiagonal coefficients ``(lo, di, up)`` of ``A = L_lam + c D1`` on interior nodes."""
    if use_numba is None:
        use_numba = USE_NUMBA
    r = np.ascontiguousarray(r, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    if use_numba:
        arrs = [np.zeros(r.size) for _ in range(6)]
        _assemble_nb(r, c, float(lam), float(fit), *arrs)
        return arrs[0][1:-1], arrs[1][1:-1], arrs[2][1:-1]
    lo, di, up, _ = _assemble_np(r, c, float(lam), float(fit))
    return lo, di, up


def thomas(sub, main, sup, rhs, use_numba=None):
    """Solve a tridiagonal system (``sub[0]`` and ``sup[-1]`` are ignored)."""
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        out = np.empty_like(main, dtype=np.float64)
        ok = _thomas_nb(np.asarray(sub, float), np.asarray(main, float),
                        np.asarray(sup, float), np.asarray(rhs, float), out)
        if not ok:
            raise np.linalg.LinAlgError("singular tridiagonal system")
        return out
    return _banded(np.asarray(sub, float), np.asarray(main, float),
                   np.asarray(sup, float), np.asarray(rhs, float))
