import json

import numpy as np
import pytest
from scipy.signal import lfilter

from dpnarx.errors import LayoutError, NumericalError, RankDeficientError
from dpnarx.narx import (
    Dataset,
    Frols,
    NarxConfig,
    RegressorTable,
    build_regressors,
    count_monomials,
    count_pnarx_params,
    fit_full_pnarx,
    infer_segments,
    predict_one_step,
    read_dataset_csv,
    simulate_free_run,
    write_dataset_csv,
)
from dpnarx.poly import CoupledPolynomial, monomial_exponents


def linear_model(a, b, cfg):
    """y(t) = a y(t-1) + b u(t - n_k) as a coupled polynomial."""
    terms = [((1,) + (0,) * cfg.n_u, a), ((0, 1) + (0,) * (cfg.n_u - 1), b)]
    return CoupledPolynomial.from_terms(cfg.m, cfg.degree, terms)


def test_regressors_hand_unrolled():
    cfg = NarxConfig(n_u=1, n_y=1, n_k=0)
    tab = build_regressors(Dataset([1, 2, 3], [10, 20, 30]), cfg)
    assert tab.Z.tolist() == [[10, 2], [20, 3]]
    assert tab.target.tolist() == [20, 30]
    assert tab.origin_index.tolist() == [1, 2]


def test_regressors_input_only_with_delay():
    cfg = NarxConfig(n_u=2, n_y=0, n_k=1)
    u = np.arange(6.0)
    tab = build_regressors(Dataset(u, 10 * u), cfg)
    assert tab.Z.tolist() == [[1, 0], [2, 1], [3, 2], [4, 3]]
    assert tab.target.tolist() == [20, 30, 40, 50]


def test_regressor_order_outputs_then_inputs():
    cfg = NarxConfig(n_u=2, n_y=3, n_k=1)
    u = np.arange(100.0, 110.0)
    y = np.arange(10.0)
    tab = build_regressors(Dataset(u, y), cfg)
    t = tab.origin_index[0]
    assert t == cfg.lag == 3
    assert tab.Z[0].tolist() == [y[2], y[1], y[0], u[2], u[1]]


def test_rows_never_straddle_segments(rng):
    u, y = rng.standard_normal(60), rng.standard_normal(60)
    segs = [(0, 20), (25, 45), (50, 60)]
    cfg = NarxConfig(n_u=2, n_y=2, n_k=0)
    tab = build_regressors(Dataset(u, y, segments=segs), cfg)
    assert len(tab) == sum(b - a - cfg.lag for a, b in segs)
    for row, t in zip(tab.Z, tab.origin_index):
        seg = next(s for s in segs if s[0] <= t < s[1])
        assert t - cfg.lag >= seg[0]
        assert row[0] == y[t - 1] and row[2] == u[t]


def test_short_segment_and_bad_layout_errors():
    cfg = NarxConfig(n_u=1, n_y=3)
    with pytest.raises(LayoutError):
        build_regressors(Dataset([1.0, 2, 3], [1.0, 2, 3]), cfg)
    with pytest.raises(LayoutError):
        Dataset([1.0, 2], [1.0])
    with pytest.raises(LayoutError):
        Dataset(np.ones(10), np.ones(10), segments=[(0, 6), (4, 10)])
    with pytest.raises(ValueError):
        NarxConfig(n_u=0, n_y=0)
    with pytest.raises(ValueError):
        NarxConfig(n_u=1, n_y=1, n_k=-1)


def test_parameter_counts():
    assert count_pnarx_params(6) == 84
    assert count_pnarx_params(1) == 4
    assert count_pnarx_params(30) == 5456 == len(monomial_exponents(30, 3))
    assert count_monomials(6, 3) == 84
    with pytest.raises(ValueError):
        count_pnarx_params(6, degree=4)


def test_linear_system_recovered(rng):
    cfg = NarxConfig(n_u=1, n_y=1, n_k=1, degree=3)
    u = rng.uniform(-1, 1, 500)
    y = lfilter([0, 1.0], [1, -0.5], u)
    fit = fit_full_pnarx(build_regressors(Dataset(u, y), cfg), cfg)
    coefs = dict(zip(map(tuple, fit.polynomial.exponents.tolist()), fit.polynomial.coefs))
    assert abs(coefs[(1, 0)] - 0.5) < 1e-8
    assert abs(coefs[(0, 1)] - 1.0) < 1e-8
    others = [v for k, v in coefs.items() if k not in ((1, 0), (0, 1))]
    assert np.max(np.abs(others)) < 1e-8


def test_noise_free_polynomial_recovery(rng):
    cfg = NarxConfig(n_u=2, n_y=0, degree=3)
    exps = monomial_exponents(2, 3)
    true = CoupledPolynomial(2, 3, exps, rng.standard_normal(len(exps)))
    u = rng.uniform(-1, 1, 400)
    d = Dataset(u, np.zeros(400))
    tab = build_regressors(d, cfg)
    tab = RegressorTable(tab.Z, true.evaluate(tab.Z), tab.origin_index)
    fit = fit_full_pnarx(tab, cfg)
    assert np.allclose(fit.polynomial.coefs, true.coefs, rtol=1e-8, atol=1e-8)


def test_residual_orthogonal_to_regressors(rng):
    cfg = NarxConfig(n_u=2, n_y=2, degree=3)
    u = rng.uniform(-1, 1, 800)
    y = np.tanh(lfilter([0, 0.6, 0.2], [1, -0.4], u)) + 0.01 * rng.standard_normal(800)
    tab = build_regressors(Dataset(u, y), cfg)
    fit = fit_full_pnarx(tab, cfg)
    X = fit.polynomial.design_matrix(tab.Z)
    assert np.max(np.abs(X.T @ fit.residuals)) / (len(tab) * np.std(tab.target)) < 1e-8


def _static_table(rng, n=2000, noise=1e-3):
    Z = rng.uniform(-1, 1, (n, 3))
    active = {(1, 0, 0): 1.0, (0, 1, 1): -0.8, (2, 0, 0): 0.6, (0, 0, 1): 0.5}
    y = sum(c * np.prod(Z ** np.array(e), axis=1) for e, c in active.items())
    y = y + noise * rng.standard_normal(n)
    return RegressorTable(Z, y, np.arange(n)), active


def test_frols_selects_true_terms(rng):
    tab, active = _static_table(rng)
    cfg = NarxConfig(n_u=3, n_y=0, degree=2)
    fit = fit_full_pnarx(tab, cfg, Frols(err_threshold=1e-4))
    chosen = {tuple(e) for e in fit.polynomial.exponents.tolist()}
    assert chosen == set(active)
    assert fit.n_candidates == 10


def test_frols_without_threshold_equals_full_fit(rng):
    tab, _ = _static_table(rng, n=300, noise=0.05)
    cfg = NarxConfig(n_u=3, n_y=0, degree=2)
    full = fit_full_pnarx(tab, cfg)
    sel = fit_full_pnarx(tab, cfg, Frols(err_threshold=0.0, max_terms=None))
    assert np.array_equal(sel.polynomial.exponents, full.polynomial.exponents)
    assert np.allclose(sel.polynomial.coefs, full.polynomial.coefs, rtol=1e-10, atol=1e-12)


def test_frols_zero_target_raises():
    tab = RegressorTable(np.ones((5, 1)), np.zeros(5), np.arange(5))
    with pytest.raises(NumericalError):
        fit_full_pnarx(tab, NarxConfig(n_u=1, n_y=0, degree=1), Frols())


def test_rank_deficient_regression_reported():
    Z = np.column_stack([np.linspace(0, 1, 50), np.linspace(0, 1, 50)])
    tab = RegressorTable(Z, Z[:, 0], np.arange(50))
    with pytest.raises(RankDeficientError) as info:
        fit_full_pnarx(tab, NarxConfig(n_u=2, n_y=0, degree=1))
    assert info.value.condition > 1e12


def test_predict_equals_target_for_exact_model(rng):
    cfg = NarxConfig(n_u=1, n_y=1, n_k=1, degree=1)
    u = rng.standard_normal(50)
    y = lfilter([0, 1.0], [1, -0.5], u)
    model = linear_model(0.5, 1.0, cfg)
    pred = predict_one_step(model, Dataset(u, y), cfg)
    assert np.allclose(pred, y[1:], atol=1e-12)
    assert np.max(np.abs(pred - lfilter([0, 1.0], [1, -0.5], u)[1:])) < 1e-12


def test_free_run_step_response_closed_form():
    cfg = NarxConfig(n_u=1, n_y=1, n_k=1, degree=1)
    model = linear_model(0.8, 0.5, cfg)
    n = 200
    u = np.ones(n)
    d = Dataset(u, np.zeros(n))
    sim = simulate_free_run(model, d, cfg)
    t = np.arange(1, n)
    closed = 0.5 * (1 - 0.8**t) / (1 - 0.8)
    assert not sim.unstable
    assert np.max(np.abs(sim.y - closed)) < 1e-9


def test_free_run_divergence_flagged():
    cfg = NarxConfig(n_u=1, n_y=1, n_k=1, degree=1)
    model = linear_model(2.0, 0.0, cfg)
    d = Dataset(np.zeros(200), np.ones(200))
    sim = simulate_free_run(model, d, cfg, y_scale=1.0)
    assert sim.unstable and sim.status == "unstable"
    assert np.isnan(sim.y[-1])


def test_free_run_equals_prediction_without_output_lags(rng):
    cfg = NarxConfig(n_u=3, n_y=0, n_k=0, degree=2)
    exps = monomial_exponents(3, 2)
    model = CoupledPolynomial(3, 2, exps, rng.standard_normal(len(exps)))
    d = Dataset(rng.standard_normal(100), rng.standard_normal(100))
    assert np.array_equal(simulate_free_run(model, d, cfg).y, predict_one_step(model, d, cfg))


def test_free_run_reinitializes_each_segment():
    cfg = NarxConfig(n_u=1, n_y=1, n_k=1, degree=1)
    model = linear_model(0.5, 0.0, cfg)
    y = np.zeros(40)
    y[0], y[20] = 1.0, 3.0
    d = Dataset(np.zeros(40), y, segments=[(0, 20), (20, 40)])
    sim = simulate_free_run(model, d, cfg)
    assert sim.y[0] == 0.5 and sim.y[19] == 1.5
    res = simulate_free_run(model, d, cfg, y_init=[2.0])
    assert res.y[0] == 1.0 and res.y[19] == 1.5
    with pytest.raises(ValueError):
        simulate_free_run(model, d, cfg, y_init=[1.0, 2.0])


def test_infer_segments_from_zero_runs():
    u = np.concatenate([np.ones(30), np.zeros(100), 2 * np.ones(40), np.zeros(99), np.ones(5)])
    assert infer_segments(u, 100) == [(0, 30), (130, 274)]


def test_csv_round_trip_with_sidecar(tmp_path, rng):
    d = Dataset(rng.standard_normal(50), rng.standard_normal(50), 10.0, [(0, 20), (30, 50)])
    path = tmp_path / "data.csv"
    write_dataset_csv(path, d, comment="generated for a test")
    assert path.read_text().startswith("# generated for a test\nt,u,y\n")
    back = read_dataset_csv(path)
    assert np.array_equal(back.u, d.u) and np.array_equal(back.y, d.y)
    assert back.segments == d.segments
    assert back.sample_rate_hz == 10.0
    meta = json.loads((tmp_path / "data.csv.segments.json").read_text())
    assert meta["segments"] == [[0, 20], [30, 50]]


def test_csv_segments_inferred_without_sidecar(tmp_path):
    u = np.concatenate([np.ones(10), np.zeros(100), np.ones(10)])
    path = tmp_path / "d.csv"
    write_dataset_csv(path, Dataset(u, u))
    assert read_dataset_csv(path).segments == [(0, 10), (110, 120)]


def test_csv_layout_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(LayoutError):
        read_dataset_csv(empty)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(LayoutError):
        read_dataset_csv(bad)
    text = tmp_path / "text.csv"
    text.write_text("t,u,y\n0,x,1\n")
    with pytest.raises(LayoutError):
        read_dataset_csv(text)
