from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kslab.model import (CriticalWarning, MassField, ModelParams, RadialGrid, TruncationSpec,
                         chandrasekhar_field, chandrasekhar_mass, radial_concentration,
                         sphere_measure, truncated_field, truncated_initial_mass)


def test_sphere_measure_values():
    assert sphere_measure(2) == pytest.approx(2 * math.pi)
    assert sphere_measure(3) == pytest.approx(4 * math.pi)
    assert sphere_measure(4) == pytest.approx(2 * math.pi ** 2)
    assert sphere_measure(5) == pytest.approx(8 * math.pi ** 2 / 3)
    with pytest.raises(ValueError):
        sphere_measure(2.5)


def test_params_validation_and_regime():
    p = ModelParams(3, 0.5)
    assert p.sigma_d == pytest.approx(4 * math.pi)
    assert p.regime == "subcritical"
    assert ModelParams(3, 1.0).regime == "critical"
    assert ModelParams(3, 1.5).regime == "supercritical"
    with pytest.raises(ValueError):
        ModelParams(2, 0.5)
    with pytest.raises(ValueError):
        ModelParams(3, 0.0)
    with pytest.raises(ValueError):
        ModelParams(3, 1.5).check_construction()
    with pytest.warns(CriticalWarning):
        ModelParams(3, 1.0).check_construction()
    assert p.chandrasekhar_coefficient() == pytest.approx(4 * math.pi)


def test_uniform_grid():
    g = RadialGrid.uniform(10.0, 100)
    assert g.n == 100 and g.r_max == 10.0
    np.testing.assert_allclose(np.diff(g.nodes), 0.1)
    assert not g.nodes.flags.writeable


def test_geometric_grid_ratio_and_first():
    g = RadialGrid.geometric(40.0, 512, stretch=5.0)
    h = np.diff(g.nodes)
    np.testing.assert_allclose(h[1:] / h[:-1], g.ratio, rtol=1e-9)
    assert g.stretch == pytest.approx(5.0)
    assert g.nodes[-1] == 40.0
    g2 = RadialGrid.geometric(10.0, 256, first=1e-3)
    assert g2.nodes[1] == pytest.approx(1e-3, rel=1e-8)
    g3 = RadialGrid.geometric(40.0, 2048)
    assert g3.nodes[1] == pytest.approx(1e-4 * 40.0, rel=1e-8)


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        RadialGrid(np.array([0.1, 1.0, 2.0]))
    with pytest.raises(ValueError):
        RadialGrid(np.array([0.0, 2.0, 1.0]))
    with pytest.raises(ValueError):
        RadialGrid.geometric(1.0, 10, stretch=1.0, first=0.01)


@pytest.mark.parametrize("d", [3, 4, 5, 7])
@pytest.mark.parametrize("K", [0.5, 1.0, 4.0])
def test_truncated_mass_continuous_at_plateau_edge(d, K):
    p = ModelParams(d, 0.5)
    tr = TruncationSpec.build(p, K)
    R = tr.R_K
    inner = p.epsilon * K ** 2 * R ** d
    outer = p.epsilon * 2 * p.sigma_d * R ** (d - 2) - p.epsilon * 4 * p.sigma_d / d * R ** (d - 2)
    assert inner == pytest.approx(outer, rel=1e-13)
    # density is continuous too: plateau equals tail at R
    assert tr.density(p, R) == pytest.approx(p.epsilon * 2 * (d - 2) / R ** 2, rel=1e-13)


@given(d=st.integers(3, 8), K=st.floats(0.1, 10.0), eps=st.floats(0.05, 0.99))
def test_truncated_datum_below_homogeneous(d, K, eps):
    p = ModelParams(d, eps)
    tr = TruncationSpec.build(p, K)
    r = np.geomspace(1e-3, 50.0, 200) / K
    m = truncated_initial_mass(p, tr, r)
    assert np.all(m <= eps * chandrasekhar_mass(p, r) * (1 + 1e-12))
    assert np.all(np.diff(m) >= 0)


@given(d=st.integers(3, 8), K=st.floats(0.1, 10.0), lam=st.floats(0.1, 10.0))
def test_truncation_scaling(d, K, lam):
    # scale^(2-d) M^K(scale r) = M^(K scale)(r)
    p = ModelParams(d, 0.5)
    r = np.linspace(0.0, 5.0, 50)
    lhs = lam ** (2 - d) * truncated_initial_mass(p, TruncationSpec.build(p, K), lam * r)
    rhs = truncated_initial_mass(p, TruncationSpec.build(p, K * lam), r)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-300)


def test_mass_field_checks():
    p = ModelParams(3, 0.5)
    g = RadialGrid.uniform(5.0, 50)
    f = truncated_field(p, TruncationSpec.build(p, 1.0), g)
    assert f.check() == []
    assert f.bound_violation() == 0.0
    assert radial_concentration(f) <= p.epsilon * 2 * p.sigma_d
    ch = chandrasekhar_field(p, g)
    assert ch.bound_violation() == pytest.approx(0.5, rel=1e-12)
    assert "M exceeds eps*2*sigma_d*r^(d-2)" in ch.check()
    bad = MassField(g, 0.0, np.r_[0.0, np.ones(50)[::-1].cumsum()[::-1]], p)
    assert "M not nondecreasing" in bad.check()
    with pytest.raises(ValueError):
        MassField(g, 0.0, np.zeros(3), p)


def test_chandrasekhar_mass_is_epsilon_free():
    r = np.array([0.5, 1.0, 2.0])
    a = chandrasekhar_mass(ModelParams(4, 0.2), r)
    b = chandrasekhar_mass(ModelParams(4, 0.9), r)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        chandrasekhar_mass(ModelParams(4, 0.2), -1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert chandrasekhar_mass(ModelParams(3, 0.5), 0.0) == 0.0
