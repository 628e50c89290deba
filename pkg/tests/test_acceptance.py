"""Acceptance criteria 1-10 at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""
from __future__ import annotations

import math

import pytest

from kslab import checks

from .conftest import ACCEPTANCE_LINES


def _report(number: int, title: str, ok: bool, summary: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {summary}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def test_criterion_01_threshold_bounds():
    res = checks.check_threshold(dims=range(3, 21), margin=1e-6, tol=1e-10, time_limit=5.0)
    d = res.detail
    ok = (res.value >= 1e-6 and 4 / math.pi < d["C3"] < 2 * math.sqrt(2 / math.pi)
          and d["upper_1_100"] < 1.013 and d["elapsed"] < 5.0)
    _report(1, "threshold bounds", ok,
            f"min chain gap {res.value:.3e} (>= 1e-6), C(3)={d['C3']:.8f}, "
            f"upper_1(100)={d['upper_1_100']:.6f} (< 1.013), {d['elapsed']:.2f}s (< 5s)")
    assert ok


def test_criterion_02_special_functions():
    res = checks.check_special_functions(n=20, prud_tol=1e-8, f11_tol=1e-9, time_limit=10.0)
    d = res.detail
    ok = d["prudnikov_max_rel"] <= 1e-8 and d["hyp1f1_max_rel"] <= 1e-9 and d["elapsed"] < 10.0
    _report(2, "special-function identities", ok,
            f"Prudnikov max rel {d['prudnikov_max_rel']:.2e} (<= 1e-8), "
            f"1F1 integral vs series {d['hyp1f1_max_rel']:.2e} (<= 1e-9), {d['elapsed']:.2f}s (< 10s)")
    assert ok


def test_criterion_03_linear_oracle():
    res = checks.check_linear_oracle()
    d = res.detail
    ok = res.value <= 1e-3 and 1.7 <= d["order"] <= 2.3 and res.seconds < 120
    _report(3, "linear-mode oracle", ok,
            f"rel error at N=2048 {res.value:.2e} (<= 1e-3), order {d['order']:.3f} "
            f"(in [1.7, 2.3]), {res.seconds:.1f}s (< 120s)")
    assert ok


def test_criterion_04_chandrasekhar():
    res = checks.check_chandrasekhar()
    d = res.detail
    ok = res.value <= 1e-6 and d["order"] >= 1.9 and d["exact_stencil"]
    _report(4, "Chandrasekhar stationarity", ok,
            f"one-step change {res.value:.2e} (<= 1e-6), residual order {d['order']:.3f} at "
            f"d={d['order_dim']} (>= 1.9), d=3 residual exact to rounding: {d['exact_stencil']}")
    assert ok


def test_criterion_05_subcritical_bounds():
    res = checks.check_subcritical()
    d = res.detail
    ok = (d["bound_violation"] <= 1e-6 and -d["K_ordering_min_gap"] <= 1e-6
          and d["sandwich_violation"] <= 1e-4)
    _report(5, "a-priori bound, K-monotonicity, sandwich", ok,
            f"bound {d['bound_violation']:.2e} (<= 1e-6), K-ordering "
            f"{max(0.0, -d['K_ordering_min_gap']):.2e} (<= 1e-6), sandwich "
            f"{d['sandwich_violation']:.2e} (<= 1e-4)")
    assert ok


def test_criterion_06_scaling():
    res = checks.check_scaling()
    d = res.detail
    errs = list(d["errors"].values())
    ok = res.value <= 1e-4 and d["order"] >= 1.5 and all(b < a for a, b in zip(errs, errs[1:]))
    _report(6, "scaling identity", ok,
            f"discrepancy at N=2048 {res.value:.2e} (<= 1e-4), order {d['order']:.3f} (>= 1.5)")
    assert ok


def test_criterion_07_self_similar_convergence():
    res = checks.check_self_similar()
    d = res.detail
    dist = d["distances"]
    ok = d["decreasing"] and res.value <= 1e-3 and res.seconds < 300
    _report(7, "self-similar convergence", ok,
            f"distance t=4 {dist['4.0']:.3e}, t=16 {dist['16.0']:.3e} (decreasing: "
            f"{d['decreasing']}; <= 1e-3 required), {res.seconds:.1f}s")
    assert d["decreasing"]
    assert res.value <= 1e-3


def test_criterion_08_profile_limits():
    res = checks.check_profile_limits()
    d = res.detail
    parts = d["parts"]
    ok = all(parts.values())
    _report(8, "profile limits", ok,
            f"U(0+) spread {d['U0_spread']:.1e} (<= 1e-4), min U(0+) "
            f"{min(d['U0_direct'], d['U0_mass_ratio'], d['U0_explicit']):.6f} (>= 0.4999), "
            f"y* spread {d['y_star_spread']:.1e} (<= 1e-6), U(20)={d['U_at_ymax']:.2e} (<= 1e-3), "
            f"tail {d['tail']:.4f} (in [0.9, 1.1])")
    for name in ("U0_agreement", "U0_lower_bound", "y_star_spread", "tail"):
        assert parts[name], name
    assert parts["U_at_ymax"], f"U(y_max) = {d['U_at_ymax']:.3e} > 1e-3"


def test_criterion_09_g_constancy():
    res = checks.check_g_constancy()
    d = res.detail
    ok = res.value <= 1e-6 and max(d["g"].values()) <= d["bound"]
    _report(9, "g constancy", ok,
            f"relative spread {res.value:.1e} (<= 1e-6), g={max(d['g'].values()):.6f} "
            f"<= Beta bound {d['bound']:.6f}")
    assert ok


def test_criterion_10_radial_residual():
    res = checks.check_radial_residual()
    d = res.detail
    ok = res.value <= 1e-3 and d["order"] >= 1.9
    _report(10, "original-system residual", ok,
            f"density-equation residual {res.value:.2e} (<= 1e-3), mass/density formulation "
            f"gap order {d['order']:.3f} (second order, >= 1.9)")
    assert ok


@pytest.fixture(scope="module", autouse=True)
def _header():
    ACCEPTANCE_LINES.clear()
    yield
