from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kslab.barrier import (BarrierClampWarning, BarrierSpec, barrier_field, barrier_from_kernel,
                           barrier_kernel, barrier_value, g_bound, g_diagnostic)
from kslab.model import ModelParams, RadialGrid
from kslab.specfun import ADAPTIVE, QuadratureSpec, integrate

P3 = ModelParams(3, 0.5)

# mpmath reference, d = 3, c0 = 4 pi; (lam, t, r, value)
ORACLE = [
    (1.0, 1.0, 0.1, 0.055648499658294284),
    (1.0, 1.0, 1.0, 5.240973662999842),
    (1.0, 0.5, 3.0, 35.340841078882264),
    (1.0, 2.0, 2.0, 14.003447396805889),
    (2.0, 1.0, 0.1, 0.0020923022024565727),
    (2.0, 1.0, 1.0, 1.899120819749786),
    (2.0, 0.5, 3.0, 32.75843112617566),
    (2.0, 2.0, 2.0, 6.917071770344249),
]


def _spec(lam):
    return BarrierSpec(lam, 4 * math.pi, P3)


@pytest.mark.parametrize("lam,t,r,ref", ORACLE)
def test_barrier_oracle(lam, t, r, ref):
    assert barrier_value(_spec(lam), t, r) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("lam,t,r,ref", ORACLE)
def test_kernel_route_agrees(lam, t, r, ref):
    assert barrier_from_kernel(_spec(lam), t, r) == pytest.approx(ref, rel=1e-9)


def test_upper_and_lower_specs():
    up, lo = BarrierSpec.upper(P3), BarrierSpec.lower(P3)
    assert up.lam == pytest.approx(1.0) and lo.lam == pytest.approx(2.0)
    assert up.kappa == pytest.approx(0.5) and lo.kappa == pytest.approx(1.0)
    r = np.linspace(0.0, 8.0, 81)
    for t in (0.25, 1.0, 4.0):
        assert np.all(barrier_value(up, t, r) >= barrier_value(lo, t, r))


def test_lower_barrier_kernel_route_and_origin():
    lo = BarrierSpec.lower(P3)
    assert barrier_value(lo, 0.7, 1.3) == pytest.approx(barrier_from_kernel(lo, 0.7, 1.3), rel=1e-10)
    assert barrier_value(lo, 0.7, 0.0) == 0.0


@given(alpha=st.floats(0.2, 5.0), r=st.floats(0.05, 6.0), t=st.floats(0.1, 4.0))
def test_barrier_parabolic_scaling(alpha, r, t):
    up = BarrierSpec.upper(P3)
    lhs = barrier_value(up, alpha ** 2 * t, alpha * r)
    rhs = alpha ** (P3.d - 2) * barrier_value(up, t, r)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@given(t=st.floats(0.05, 5.0))
def test_barrier_below_datum(t):
    up = BarrierSpec.upper(P3)
    r = np.linspace(0.01, 10.0, 40)
    assert np.all(barrier_value(up, t, r) <= up.c0 * r ** (P3.d - 2) * (1 + 1e-12))


def test_barrier_field_and_validation():
    up = BarrierSpec.upper(P3)
    g = RadialGrid.uniform(5.0, 20)
    f = barrier_field(up, 1.0, g)
    assert f.values.shape == (21,) and not f.values.flags.writeable
    with pytest.raises(ValueError):
        barrier_value(up, 0.0, 1.0)
    with pytest.raises(ValueError):
        barrier_value(up, 1.0, -1.0)
    with pytest.raises(ValueError):
        BarrierSpec(0.0, 1.0, P3)
    with pytest.raises(ValueError):
        BarrierSpec(2.5, 1.0, P3)
    with pytest.raises(ValueError):
        BarrierSpec(1.0, -1.0, P3)
    with pytest.raises(ValueError):
        barrier_kernel(up, 0.0, 1.0, 1.0)


def test_upper_clamp_warning():
    with pytest.warns(BarrierClampWarning):
        spec = BarrierSpec.upper(ModelParams(3, 1.0))
    assert spec.lam == pytest.approx(3 - 1 - 2 * (1 - 1e-3))


def test_kernel_positive_with_gaussian_decay():
    up = BarrierSpec.upper(P3)
    s = np.linspace(0.0, 20.0, 200)
    k = barrier_kernel(up, 1.0, 2.0, s)
    assert np.all(k >= 0) and k[-1] < 1e-12 * k.max()


def test_g_value_and_bound():
    up = BarrierSpec.upper(P3)
    g = g_diagnostic(up, 1.0, 1.0)
    assert g == pytest.approx(5.456514922572753, rel=1e-12)
    assert g <= g_bound(up, 1.0)
    assert [g_diagnostic(up, t, 1.0) for t in (0.5, 2.0, 4.0)] == pytest.approx([g] * 3, rel=1e-10)
    assert g_diagnostic(up, 1.0, 0.0) == 0.0


def test_g_matches_direct_quadrature():
    lo = BarrierSpec.lower(P3)
    quad = QuadratureSpec(scheme=ADAPTIVE, rel_tol=1e-11, max_depth=30)
    direct = integrate(lambda r: barrier_value(lo, 1.0, r) / r ** 2, 1e-12, 1.0, quad)
    assert g_diagnostic(lo, 1.0, 1.0) == pytest.approx(direct, rel=1e-9)


def test_g_small_kappa_is_finite():
    spec = BarrierSpec(P3.d - 3 + 0.002, 4 * math.pi, P3)
    g = g_diagnostic(spec, 1.0, 1.0)
    assert math.isfinite(g) and 0 < g <= g_bound(spec, 1.0)
