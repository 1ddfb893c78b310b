import math

import numpy as np
import pytest

import calibench


def test_synthetic_shape_and_rule():
    x, y = calibench.generate_synthetic(200, 5, 1)
    assert x.shape == (200, 5)
    assert list(y) == [int(a + b > 1) for a, b in x[:, :2]]


def test_platt_and_isotonic():
    rng = np.random.default_rng(0)
    s = rng.uniform(-4, 4, 5000)
    y = (rng.uniform(size=s.size) < 1 / (1 + np.exp(-(2 * s + 1)))).astype(int)
    platt = calibench.fit_platt(s.tolist(), y.tolist())
    assert 1.8 <= platt.A <= 2.2
    assert 0.8 <= platt.B <= 1.2
    assert platt([0.0])[0] == pytest.approx(1 / (1 + math.exp(-platt.B)))

    iso = calibench.fit_isotonic([1, 2, 3, 4], [0, 1, 0, 1])
    assert iso([1, 2.5, 100]) == [0.0, 0.5, 1.0]


def test_metrics():
    assert calibench.ece([0.2, 0.2, 0.8, 0.8], [0, 1, 1, 1], 2) == pytest.approx(0.25)
    assert calibench.auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    report = calibench.evaluate([0.1, 0.9, 0.4, 0.6], [0, 1, 0, 1], hl_groups=2)
    assert report["reliability"] == pytest.approx(1 - report["ece"])


def test_stats():
    r = calibench.paired_t_test([3, 5, 7], [2, 3, 4])
    assert r["df"] == 2
    assert r["p_value"] == pytest.approx(0.0742, abs=1e-4)
    assert calibench.bonferroni_threshold(15, 0.05) == pytest.approx(0.05 / 15)
    w, p = calibench.shapiro_wilk([2.1, 3.5, 1.2, 7.7])
    assert w == pytest.approx(0.889772833837, abs=1e-6)


def test_errors_carry_codes():
    with pytest.raises(calibench.CalibenchError) as info:
        calibench.fit_platt([0.1, 0.2], [1, 1], ridge=0.0)
    assert info.value.code == "DegenerateLabels"
    assert isinstance(info.value, ValueError)


def test_pipeline_and_benchmark():
    x, y = calibench.generate_synthetic(1000, 10, 42)
    art = calibench.pipeline(x, y, "logreg", 42)
    assert art["selection"]["description"] == "platt: cal size 200 < 500"
    table = calibench.benchmark(
        {"data": {"synthetic": {"n": 300, "d": 4, "seed": 1}}, "features": "informative", "folds": 3, "repeats": 1}
    )
    assert len(table["records"]) == 9


def test_convergence():
    r = calibench.convergence(sizes=[100, 300, 1000, 10000], trials=10, eval_size=1000)
    assert r["slope"] < 0
