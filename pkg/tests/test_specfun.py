from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kslab import specfun as sf
from kslab.checks import hyp1f1_sample, prudnikov_sample

# Reference values computed with mpmath at 30 significant digits.
BESSEL_IE = [
    (0.0, 0.1, 0.9071009257823011),
    (0.5, 1.0, 0.3449513138882446),
    (1.5, 5.0, 0.142739649185369),
    (2.0, 25.0, 0.0739106844818933),
    (1.0, 40.0, 0.062482229074442064),
    (3.5, 100.0, 0.03755981728637429),
    (0.0, 1000.0, 0.012617240455891257),
    (2.5, 29.9, 0.0658828574600277),
    (2.5, 30.1, 0.06570885838243419),
]

HYP1F1 = [
    (0.5, 1.5, 2.0, 2.3644538928052095),
    (1.0, 3.0, -10.0, 0.18000090799859525),
    (2.5, 7.0, 30.0, 1025076330.9416498),
    (0.1, 20.0, -30.0, 0.9115362430743381),
    (3.0, 4.0, 0.0, 1.0),
    (1.25, 2.5, -0.5, 0.7857741434351927),
]

PRUDNIKOV = [
    (4.0, 1.5, 1.0, 2.0, 1.7932658141931461),
    (1.0, 0.5, 2.0, 1.0, 0.30967347199247525),
    (3.2, 2.0, 0.5, 4.0, 14544.202786492835),
]


def test_gamma_and_beta():
    assert sf.gamma_fn(5.0) == pytest.approx(24.0, rel=1e-15)
    assert sf.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert sf.beta_fn(2.0, 3.0) == pytest.approx(1.0 / 12.0, rel=1e-15)
    assert sf.beta_fn(100.0, 100.0) == pytest.approx(math.exp(sf.betaln(100.0, 100.0)), rel=1e-12)
    assert sf.gamma_ratio(200.5, 200.0) == pytest.approx(math.sqrt(200.0), rel=1e-3)
    with pytest.raises(ValueError):
        sf.gamma_fn(0.0)
    with pytest.raises(ValueError):
        sf.beta_fn(-1.0, 2.0)


@pytest.mark.parametrize("nu,x,ref", BESSEL_IE)
def test_bessel_ie_oracle(nu, x, ref):
    assert sf.bessel_ie(nu, x) == pytest.approx(ref, rel=1e-13)


def test_bessel_ie_vectorised_and_continuous_at_switch():
    x = np.array([29.9, 30.0, 30.1])
    vals = sf.bessel_ie(2.5, x)
    assert vals.shape == (3,)
    assert vals[0] > vals[1] > vals[2]
    assert sf.bessel_ie(0.5, 0.0) == 0.0
    assert sf.bessel_ie(0.0, 0.0) == 1.0


def test_bessel_half_order_closed_form():
    x = np.linspace(0.1, 60.0, 50)
    exact = np.sqrt(2.0 / (np.pi * x)) * np.sinh(x) * np.exp(-x)
    np.testing.assert_allclose(sf.bessel_ie(0.5, x), exact, rtol=1e-12)


def test_bessel_i_overflow_and_domain():
    assert sf.bessel_i(0.0, 1.0) == pytest.approx(1.2660658777520082, rel=1e-14)
    with pytest.raises(OverflowError):
        sf.bessel_i(0.0, 1000.0)
    with pytest.raises(ValueError):
        sf.bessel_ie(-1.0, 1.0)
    with pytest.raises(ValueError):
        sf.bessel_ie(1.0, -1.0)


@pytest.mark.parametrize("a,b,z,ref", HYP1F1)
def test_hyp1f1_oracle(a, b, z, ref):
    assert sf.hyp1f1(a, b, z) == pytest.approx(ref, rel=1e-12)
    assert sf.hyp1f1_series(a, b, z) == pytest.approx(ref, rel=1e-12)


def test_hyp1f1_domain_and_vector():
    with pytest.raises(ValueError):
        sf.hyp1f1(2.0, 1.0, 0.5)
    z = np.array([-3.0, 0.0, 3.0])
    vals = sf.hyp1f1(0.5, 1.5, z)
    np.testing.assert_allclose(vals, [sf.hyp1f1_series(0.5, 1.5, v) for v in z], rtol=1e-12)


def test_hyp1f1_sample_agreement():
    worst = max(abs(sf.hyp1f1(a, b, z) / sf.hyp1f1_series(a, b, z) - 1.0)
                for a, b, z in hyp1f1_sample(40))
    assert worst <= 1e-9


@given(a=st.floats(0.05, 5.0), gap=st.floats(0.05, 5.0), z=st.floats(-20.0, 20.0))
def test_hyp1f1_kummer_transform(a, gap, z):
    b = a + gap
    lhs = sf.hyp1f1(a, b, z)
    rhs = math.exp(z) * sf.hyp1f1(b - a, b, -z)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@pytest.mark.parametrize("beta,nu,p,q,ref", PRUDNIKOV)
def test_prudnikov_oracle(beta, nu, p, q, ref):
    assert sf.prudnikov_lhs(beta, nu, p, q) == pytest.approx(ref, rel=1e-11)
    assert sf.prudnikov_rhs(beta, nu, p, q) == pytest.approx(ref, rel=1e-11)


def test_prudnikov_sample_identity():
    worst = max(abs(sf.prudnikov_lhs(*s) / sf.prudnikov_rhs(*s) - 1.0) for s in prudnikov_sample(8))
    assert worst <= 1e-8


def test_prudnikov_domain():
    with pytest.raises(ValueError):
        sf.prudnikov_lhs(-1.0, 0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        sf.prudnikov_lhs(1.0, 0.5, 0.0, 1.0)


def test_tanh_sinh_endpoint_singularity():
    val, err = sf.tanh_sinh(lambda x: x ** -0.5, 0.0, 1.0)
    assert val == pytest.approx(2.0, rel=1e-12)
    assert err < 1e-10
    val, _ = sf.tanh_sinh(np.cos, 1.0, 0.0)
    assert val == pytest.approx(-math.sin(1.0), rel=1e-13)


def test_gauss_kronrod_smooth_and_peaked():
    spec = sf.QuadratureSpec(scheme=sf.ADAPTIVE, rel_tol=1e-12, max_depth=30)
    val, _ = sf.gauss_kronrod(np.exp, 0.0, 1.0, spec)
    assert val == pytest.approx(math.e - 1.0, rel=1e-13)
    val = sf.integrate(lambda x: 1.0 / (1e-4 + x * x), -1.0, 1.0, spec)
    assert val == pytest.approx(2.0 / 1e-2 * math.atan(1.0 / 1e-2), rel=1e-10)


def test_quadrature_error_on_depth_limit():
    spec = sf.QuadratureSpec(rel_tol=1e-15, max_depth=1)
    with pytest.raises(sf.QuadratureError):
        sf.tanh_sinh(lambda x: np.abs(np.sin(40 * x)), 0.0, 3.0, spec)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        sf.QuadratureSpec(scheme="simpson")
    with pytest.raises(ValueError):
        sf.QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        sf.QuadratureSpec(max_depth=0)
    assert sf.QuadratureSpec().to_dict()["scheme"] == sf.DOUBLE_EXPONENTIAL


@given(alpha=st.floats(0.2, 6.0), beta=st.floats(0.2, 6.0))
def test_beta_exp_integral_at_zero_is_beta(alpha, beta):
    assert sf.beta_exp_integral(alpha, beta, 0.0) == pytest.approx(sf.beta_fn(alpha, beta), rel=1e-10)
