"""Live cross-checks against mpmath on a few points (the frozen tables cover the rest)."""
from __future__ import annotations

import pytest

mp = pytest.importorskip("mpmath")

from kslab import blowup, specfun  # noqa: E402
from kslab.barrier import BarrierSpec, barrier_value  # noqa: E402
from kslab.model import ModelParams  # noqa: E402

mp.mp.dps = 30


def test_threshold_d3():
    d = 3
    w = lambda rho: mp.e ** (-rho * rho)  # noqa: E731
    num = mp.quad(lambda rho: w(rho) * rho ** (d + 1) / (2 * (d - 2) + 4 * rho * rho), [0, 1, mp.inf])
    ref = 16 * num / mp.gamma(mp.mpf(d) / 2)
    assert blowup.compute_threshold(d).C_value == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("a,b,z", [(0.3, 2.0, 12.0), (1.5, 9.0, -25.0)])
def test_hyp1f1(a, b, z):
    assert specfun.hyp1f1(a, b, z) == pytest.approx(float(mp.hyp1f1(a, b, z)), rel=1e-12)


@pytest.mark.parametrize("nu,x", [(0.25, 3.0), (4.0, 70.0)])
def test_bessel_ie(nu, x):
    ref = mp.besseli(nu, x) * mp.e ** (-x)
    assert specfun.bessel_ie(nu, x) == pytest.approx(float(ref), rel=1e-13)


def test_barrier_quadrature():
    p = ModelParams(4, 0.3)
    spec = BarrierSpec.upper(p)
    t, r = 1.5, 2.0
    z = mp.mpf(r) ** 2 / (4 * t)
    k = mp.mpf(spec.kappa)
    j = mp.quad(lambda s: s ** (mp.mpf(p.d) / 2 - 1) * (1 - s) ** (k - 1) * mp.e ** (z * (s - 1)), [0, 1])
    ref = mp.mpf(2) ** (p.d - 3 - spec.lam) * spec.c0 / mp.gamma(k) * t ** (-k) * r ** (spec.lam + 1) * j
    assert barrier_value(spec, t, r) == pytest.approx(float(ref), rel=1e-11)
