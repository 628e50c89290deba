from __future__ import annotations

import pytest

from kslab import checks
from kslab.model import ModelParams


def test_registry_consistency():
    assert set(checks.PRESETS["paper"]) == set(checks.CHECKS)
    assert set(checks.PRESETS["quick"]) <= set(checks.CHECKS)
    assert checks.PARAMETRIC <= set(checks.CHECKS)
    with pytest.raises(KeyError):
        checks.run_check("nope")


def test_result_line_and_dict():
    res = checks.run_check("g-constancy", ModelParams(4, 0.3))
    assert res.passed and res.seconds >= 0
    assert res.line().startswith("PASS g-constancy: value=")
    d = res.to_dict()
    assert d["name"] == "g-constancy" and d["detail"]["lambda"] == pytest.approx(4 - 1 - 0.6)


def test_samples_are_reproducible():
    assert checks.prudnikov_sample(5) == checks.prudnikov_sample(5)
    for a, b, z in checks.hyp1f1_sample(50):
        assert 0 < a < b <= 20 and abs(z) <= 30
    for beta, nu, p, q in checks.prudnikov_sample(50):
        assert beta + nu > 0 and p > 0 and q > 0


def test_threshold_check_other_dims():
    res = checks.check_threshold(dims=range(3, 8))
    assert res.passed and res.detail["dims"] == [3, 4, 5, 6, 7]
