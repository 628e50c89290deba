from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kslab.model import (MassField, ModelParams, RadialGrid, TruncationSpec, chandrasekhar_field,
                         truncated_field)
from kslab.poisson import (chandrasekhar_residual, density_from_mass, diff1, diff2, mass_operator,
                           potential_gradient, sign_identity_gap)


def _poly_field(p, grid):
    """``u = 1 - r^2`` and its mass ``sigma (r^d/d - r^(d+2)/(d+2))``."""
    r = grid.nodes
    m = p.sigma_d * (r ** p.d / p.d - r ** (p.d + 2) / (p.d + 2))
    return MassField(grid, 0.0, m, p), 1.0 - r ** 2


def test_stencils_exact_on_quadratics():
    r = RadialGrid.geometric(3.0, 64, stretch=3.0).nodes
    f = 2.0 - r + 0.5 * r ** 2
    np.testing.assert_allclose(diff1(r, f), -1.0 + r, atol=1e-10)
    np.testing.assert_allclose(diff2(r, f)[1:-1], 1.0, atol=1e-7)


@given(d=st.integers(3, 9), n=st.integers(16, 400), stretch=st.floats(0.0, 6.0))
def test_regular_density_exact_for_polynomial(d, n, stretch):
    p = ModelParams(d, 0.5)
    grid = RadialGrid.geometric(2.0, n, stretch=stretch)
    field, u = _poly_field(p, grid)
    np.testing.assert_allclose(density_from_mass(field), u, atol=1e-9)


def test_limiter_clips_negative_density():
    p = ModelParams(3, 0.5)
    field, u = _poly_field(p, RadialGrid.uniform(2.0, 100))
    assert density_from_mass(field).min() < 0
    assert density_from_mass(field, limiter=True).min() == 0.0


@pytest.mark.parametrize("d", [3, 4, 6])
def test_chandrasekhar_potential_gradient(d):
    p = ModelParams(d, 0.5)
    grid = RadialGrid.geometric(10.0, 256)
    dens = potential_gradient(chandrasekhar_field(p, grid), regular=False)
    r = grid.nodes[1:]
    np.testing.assert_allclose(dens.psi_r[1:], -2.0 / r, rtol=1e-13)
    assert dens.psi_r[0] == 0.0
    if d <= 4:
        # three-point stencils are exact on r^(d-2) for these dimensions
        np.testing.assert_allclose(dens.values[2:-1], 2.0 * (d - 2) / r[1:-1] ** 2, rtol=1e-10)


def test_zero_field():
    p = ModelParams(3, 0.5)
    grid = RadialGrid.uniform(1.0, 10)
    dens = potential_gradient(MassField(grid, 0.0, np.zeros(11), p))
    assert np.all(dens.values == 0) and np.all(dens.psi_r == 0)


@given(d=st.integers(3, 7), K=st.floats(0.2, 8.0), eps=st.floats(0.05, 0.99))
def test_potential_gradient_bound(d, K, eps):
    p = ModelParams(d, eps)
    grid = RadialGrid.geometric(20.0, 200)
    dens = potential_gradient(truncated_field(p, TruncationSpec.build(p, K), grid))
    r = grid.nodes
    assert np.all(np.abs(r * dens.psi_r) <= 2.0 * eps * (1 + 1e-12))


def test_sign_identity():
    p = ModelParams(3, 0.5)
    field, _ = _poly_field(p, RadialGrid.uniform(2.0, 200))
    assert sign_identity_gap(field) <= 1e-12


def test_chandrasekhar_residual_exact_in_low_dimension():
    for d in (3, 4):
        assert chandrasekhar_residual(ModelParams(d, 0.5), RadialGrid.uniform(10.0, 256)) <= 1e-10


def test_chandrasekhar_residual_second_order_d5():
    p = ModelParams(5, 0.5)
    res = [chandrasekhar_residual(p, RadialGrid.uniform(10.0, n), (0.5, 5.0)) for n in (256, 512, 1024)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders > 1.9)


def test_mass_operator_vanishes_on_chandrasekhar():
    p = ModelParams(3, 0.5)
    grid = RadialGrid.uniform(5.0, 100)
    m = chandrasekhar_field(p, grid).values
    op = mass_operator(p, grid.nodes, m)
    scale = np.max(np.abs(m))
    assert np.nanmax(np.abs(op[1:-1])) <= 1e-10 * scale
