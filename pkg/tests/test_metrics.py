import numpy as np
import pytest

from dpnarx.metrics import compute_metrics


def test_identical_signals():
    y = np.sin(np.arange(20.0))
    m = compute_metrics(y, y)
    assert m.fit_percent == 100.0 and m.e_rms == 0.0 and m.n_points == 20


def test_mean_predictor_scores_zero():
    y = np.arange(10.0)
    assert abs(compute_metrics(y, np.full(10, y.mean())).fit_percent) < 1e-12


def test_fit_erms_identity(rng):
    for _ in range(20):
        y = rng.standard_normal(50) * rng.uniform(0.01, 10)
        yh = y + rng.standard_normal(50) * rng.uniform(0, 1)
        m = compute_metrics(y, yh)
        rms_dev = np.sqrt(np.mean((y - y.mean()) ** 2))
        assert abs(m.e_rms - (1 - m.fit_percent / 100) * rms_dev) < 1e-12 * max(1.0, m.e_rms)


def test_table_consistency_example():
    # a simulation with FIT 99.11 % and e_RMS 0.00047 implies std(y) near 0.0528
    assert abs(0.00047 / (1 - 0.9911) - 0.0528) < 1e-3


def test_constant_target():
    m = compute_metrics(np.ones(5), np.zeros(5))
    assert np.isnan(m.fit_percent) and m.e_rms == 1.0


def test_input_validation():
    with pytest.raises(ValueError):
        compute_metrics([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        compute_metrics([1.0], [1.0])
