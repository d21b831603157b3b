import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arxcast.core import AlignedSample, TimeIndex, Variable, align
from arxcast.errors import CorruptFile, MissingExogenous, ModelNotFound, Singular, Underdetermined, VersionMismatch
from arxcast.estimation import (
    HourlyModel,
    Kind,
    ModelSet,
    fit_bucket,
    fit_hourly,
    fit_ols,
    in_sample_rmse,
    load_models,
    predict,
    residual_std,
    save_models,
)
from arxcast.synthetic import oracle_ols


def test_fit_ols_noiseless_line():
    x = np.arange(10.0)
    res = fit_ols(np.column_stack([x, np.ones_like(x)]), 2 * x + 1)
    np.testing.assert_allclose(res.coefficients, [2.0, 1.0], rtol=0, atol=1e-12)
    assert res.sigma == pytest.approx(0.0, abs=1e-12)


def test_fit_ols_all_zero_is_singular():
    with pytest.raises(Singular):
        fit_ols(np.zeros((5, 2)), np.zeros(5))


def test_fit_ols_collinear_is_singular():
    x = np.arange(6.0)
    with pytest.raises(Singular):
        fit_ols(np.column_stack([x, 2 * x, np.ones(6)]), x)


def test_fit_ols_underdetermined():
    with pytest.raises(Underdetermined):
        fit_ols(np.ones((1, 2)), np.ones(1))


def test_fit_ols_random_50x2_matches_normal_equations():
    rng = np.random.default_rng(50)
    X = rng.normal(size=(50, 2))
    y = X @ [1.7, -0.4] + rng.normal(scale=0.3, size=50)
    np.testing.assert_allclose(fit_ols(X, y).coefficients, oracle_ols(X, y), rtol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 200), st.sampled_from([2, 3]))
def test_fit_ols_oracle_property(seed, n, k):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.normal(size=(n, k - 1)), np.ones(n)])
    coef = rng.uniform(0.5, 3.0, size=k) * rng.choice([-1, 1], size=k)
    y = X @ coef + rng.normal(scale=0.1, size=n)
    np.testing.assert_allclose(fit_ols(X, y).coefficients, oracle_ols(X, y), rtol=1e-9)


def test_sigma_is_sample_std_of_residuals():
    rng = np.random.default_rng(1)
    X = np.column_stack([rng.normal(size=30), np.ones(30)])
    y = rng.normal(size=30)
    res = fit_ols(X, y)
    assert res.sigma == pytest.approx(np.std(res.diagnostics.residuals, ddof=1), rel=1e-14)
    assert residual_std([4.2]) == 0.0


def test_std_errors_match_textbook_formula():
    rng = np.random.default_rng(2)
    X = np.column_stack([rng.normal(size=40), np.ones(40)])
    y = X @ [0.5, 2.0] + rng.normal(size=40)
    res = fit_ols(X, y)
    r = res.diagnostics.residuals
    cov = (r @ r / (40 - 2)) * np.linalg.inv(X.T @ X)
    np.testing.assert_allclose(res.diagnostics.std_errors, np.sqrt(np.diag(cov)), rtol=1e-10)


def _rows(lag, exog, target, hour=12):
    return [AlignedSample(hour, float(t), float(a), float(b), TimeIndex(24 * i + 11, 0))
            for i, (a, b, t) in enumerate(zip(lag, exog, target))]


def test_night_bucket_gives_zero_model():
    rows = _rows([0] * 30, [0] * 30, [0] * 30, hour=3)
    for kind in Kind:
        m, d, _ = fit_bucket(3, rows, kind)
        assert (m.alpha, m.gamma, m.sigma_eps) == (0.0, 0.0, 0.0)
        assert m.beta == (None if kind is Kind.AR else 0.0)
        assert d.degenerate


def test_noiseless_bucket_recovery():
    rng = np.random.default_rng(7)
    lag, exog = rng.uniform(0, 50, 40), rng.uniform(0, 50, 40)
    m, _, _ = fit_bucket(9, _rows(lag, exog, 0.3 * lag + 0.7 * exog + 5), Kind.ARX)
    assert abs(m.alpha - 0.3) < 1e-8 and abs(m.beta - 0.7) < 1e-8 and abs(m.gamma - 5) < 1e-8


def test_constant_predictor_is_dropped():
    rng = np.random.default_rng(8)
    exog = rng.uniform(0, 10, 25)
    m, d, notes = fit_bucket(5, _rows(np.full(25, 3.0), exog, 2 * exog + 1), Kind.ARX)
    assert m.alpha == 0.0 and m.beta == pytest.approx(2.0) and m.gamma == pytest.approx(1.0)
    assert d.columns == ("exog", "const") and notes


def test_constant_forecast_is_dropped():
    rng = np.random.default_rng(9)
    lag = rng.uniform(0, 10, 25)
    m, d, _ = fit_bucket(5, _rows(lag, np.full(25, 4.0), 0.5 * lag + 1), Kind.ARX)
    assert m.beta == 0.0 and m.alpha == pytest.approx(0.5) and d.columns == ("lag", "const")


def test_empty_bucket_gets_zero_model():
    m, d, notes = fit_bucket(4, [], Kind.ARX)
    assert m.n_train == 0 and m.alpha == m.gamma == 0.0 and d.degenerate and notes


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_nested_model_dominance_property(seed, n):
    rng = np.random.default_rng(seed)
    lag, exog = rng.normal(size=n), rng.normal(size=n)
    if rng.random() < 0.2:
        exog = lag.copy()  # collinear predictors
    target = rng.normal(size=n) + rng.random() * exog
    rows = _rows(lag, exog, target)
    arx, _, _ = fit_bucket(12, rows, Kind.ARX)
    ar, _, _ = fit_bucket(12, rows, Kind.AR)
    assert in_sample_rmse(arx, rows) <= in_sample_rmse(ar, rows) + 1e-12


def test_fit_hourly_noiseless_synthetic(noiseless_dataset, noiseless_config):
    truth = noiseless_config.resolved_params()
    for var in Variable:
        a = align(noiseless_dataset.measurements, noiseless_dataset.forecasts, var)
        ms = fit_hourly(a.buckets, Kind.ARX, var)
        assert sorted(ms.models) == list(range(1, 25))
        for h in range(1, 25):
            p = truth[var, h]
            assert abs(ms[h].alpha - p.alpha) < 1e-8
            assert abs(ms[h].beta - p.beta) < 1e-8
            assert abs(ms[h].gamma - p.gamma) < 1e-8
            # diagnostics self-consistency
            assert ms[h].sigma_eps == pytest.approx(residual_std(ms.diagnostics[h].residuals), abs=1e-12)


def test_fit_hourly_night_rows(noiseless_dataset):
    a = align(noiseless_dataset.measurements, noiseless_dataset.forecasts, Variable.IRRADIANCE)
    ms = fit_hourly(a.buckets, Kind.ARX, Variable.IRRADIANCE)
    for h in list(range(1, 9)) + list(range(21, 25)):
        assert (ms[h].alpha, ms[h].beta, ms[h].sigma_eps) == (0.0, 0.0, 0.0)
    for h in range(9, 21):
        assert ms[h].sigma_eps >= 0 and ms[h].beta > 0


def _constant_set(kind, alpha, beta, gamma, variable=Variable.IRRADIANCE):
    models = {h: HourlyModel(h, alpha, beta if kind is Kind.ARX else None, gamma, 1.0, 10) for h in range(1, 25)}
    return ModelSet(variable, kind, models)


def test_predict_zero_model():
    ms = _constant_set(Kind.ARX, 0.0, 0.0, 0.0)
    assert predict(ms, 5, 123.0, 456.0) == 0.0


def test_predict_convex_combination():
    ms = _constant_set(Kind.ARX, 0.5, 0.5, 0.0, Variable.TEMPERATURE)
    assert predict(ms, 7, 288.4, 288.4) == pytest.approx(288.4)


def test_predict_hour12_table_row():
    # alpha, beta from the published hour-12 irradiance row; gamma chosen for the fixture
    ms = _constant_set(Kind.ARX, 0.01, 0.91, 20.0)
    assert predict(ms, 12, 600.0, 700.0) == pytest.approx(0.01 * 600 + 0.91 * 700 + 20.0)
    assert predict(ms, 12, 600.0, 700.0) == pytest.approx(663.0)


def test_predict_missing_exogenous():
    with pytest.raises(MissingExogenous):
        predict(_constant_set(Kind.ARX, 0.1, 0.9, 0.0), 1, 1.0)
    with pytest.raises(ValueError):
        predict(_constant_set(Kind.AR, 0.1, None, 0.0), 1, 1.0, 2.0)


def test_predict_floors_nonnegative_variables_only():
    irr = _constant_set(Kind.AR, 1.0, None, -50.0)
    assert predict(irr, 1, 10.0) == 0.0
    assert predict(irr, 1, 10.0, floor=False) == -40.0
    temp = _constant_set(Kind.AR, 1.0, None, -50.0, Variable.TEMPERATURE)
    assert predict(temp, 1, 10.0) == -40.0


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.01, 100))
def test_prediction_is_affine(alpha, beta, lag, exog, c):
    ms = _constant_set(Kind.ARX, alpha, beta, 0.0)
    lhs = predict(ms, 3, c * lag, c * exog, floor=False)
    rhs = c * predict(ms, 3, lag, exog, floor=False)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_save_load_round_trip(tmp_path, small_dataset):
    for kind in Kind:
        a = align(small_dataset.measurements, small_dataset.forecasts, Variable.WIND)
        ms = fit_hourly(a.buckets, kind, Variable.WIND)
        p = save_models(ms, tmp_path / f"{kind.value}.json")
        back = load_models(p)
        assert back == ms
        doc = json.loads(p.read_text())
        assert set(doc) == {"schema_version", "variable", "kind", "lag", "lead", "models"}
        assert ("beta" in doc["models"][0]) == (kind is Kind.ARX)


def test_load_truncated_file(tmp_path, small_dataset):
    a = align(small_dataset.measurements, small_dataset.forecasts, Variable.WIND)
    p = save_models(fit_hourly(a.buckets, Kind.ARX, Variable.WIND), tmp_path / "m.json")
    p.write_text(p.read_text()[:200])
    with pytest.raises(CorruptFile):
        load_models(p)


def test_load_version_mismatch_and_missing(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(VersionMismatch):
        load_models(p)
    with pytest.raises(ModelNotFound):
        load_models(tmp_path / "nope.json")


def test_hand_written_fixture_loads(tmp_path):
    entries = ",\n".join(
        f'{{"hour": {h}, "alpha": 0.25, "gamma": 1.5, "sigma_eps": 0.75, "n_train": 40}}' for h in range(1, 25)
    )
    text = f'{{"schema_version": 1, "variable": "temperature", "kind": "AR", "lag": 18, "lead": 18,\n"models": [{entries}]}}'
    p = tmp_path / "fixture.json"
    p.write_text(text)
    ms = load_models(p)
    assert len(ms.models) == 24 and ms.kind is Kind.AR and ms.lag == 18
    assert ms[24] == HourlyModel(24, 0.25, None, 1.5, 0.75, 40)


def test_load_rejects_incomplete_or_inconsistent(tmp_path):
    base = {"schema_version": 1, "variable": "wind", "kind": "ARX", "lag": 24, "lead": 18}
    p = tmp_path / "m.json"
    models = [{"hour": h, "alpha": 0.1, "beta": 0.8, "gamma": 0.0, "sigma_eps": 1.0, "n_train": 3} for h in range(1, 24)]
    p.write_text(json.dumps({**base, "models": models}))
    with pytest.raises(CorruptFile):
        load_models(p)
    models.append({"hour": 24, "alpha": 0.1, "gamma": 0.0, "sigma_eps": 1.0, "n_train": 3})
    p.write_text(json.dumps({**base, "models": models}))
    with pytest.raises(CorruptFile):
        load_models(p)
