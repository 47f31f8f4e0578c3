import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from tradecast.errors import LengthMismatch, TooFewPairs, UnknownColumn, ZeroVariance
from tradecast.panel import EconRecord, TradeRecord, inner_join
from tradecast.stats import (OlsModel, correlation_matrix, ols_fit, ols_forecast, pearson,
                             r_squared)


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-15)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)
    # deviations (-1,0,1) and (-1,1,0): cov 1, variances 2 and 2 -> 1/2
    assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)


def test_pearson_drops_incomplete_pairs():
    assert pearson([1, None, 2, 3, np.nan], [2, 7, 4, 6, 1]) == pytest.approx(1.0)


def test_pearson_errors():
    with pytest.raises(ZeroVariance):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(TooFewPairs):
        pearson([1, None], [1, 2])
    with pytest.raises(LengthMismatch):
        pearson([1, 2], [1, 2, 3])


finite = st.floats(-1e6, 1e6, allow_nan=False)
series = st.lists(finite, min_size=3, max_size=30)


def _spread(x):
    x = np.asarray(x)
    return np.ptp(x) > 1e-3 * (np.abs(x).max() + 1)


@settings(max_examples=200, deadline=None)
@given(series, st.data())
def test_pearson_properties(x, data):
    y = data.draw(st.lists(finite, min_size=len(x), max_size=len(x)))
    assume(_spread(x) and _spread(y))
    r = pearson(x, y)
    assert abs(r) <= 1 + 1e-12
    assert r == pytest.approx(pearson(y, x), abs=1e-12)
    a = data.draw(st.floats(0.01, 100))
    b = data.draw(st.floats(-1e3, 1e3))
    assert pearson(a * np.asarray(x) + b, y) == pytest.approx(r, abs=1e-9)
    assert pearson(x, -a * np.asarray(x) + b) == pytest.approx(-1.0, abs=1e-9)


def _panel(cols):
    n = len(next(iter(cols.values())))
    trade = [TradeRecord("AUS", "JPN", "Beef", 2000 + i, 1.0) for i in range(n)]
    econ = [EconRecord("AUS", "JPN", 2000 + i, {k: v[i] for k, v in cols.items()})
            for i in range(n)]
    return inner_join(trade, econ)


def test_correlation_matrix_shape_and_values():
    panel = _panel({"a": [1.0, 2.0, 3.0, 4.0], "b": [2.0, 4.0, 6.0, 8.0],
                    "c": [1.0, 0.0, 1.0, 3.0]})
    cm = correlation_matrix(panel, ["a", "b", "c"])
    assert cm.values.shape == (3, 3)
    assert np.all(np.diag(cm.values) == 1.0)
    assert cm.get("a", "b") == pytest.approx(1.0)
    assert np.allclose(cm.values, cm.values.T, atol=1e-12)
    assert np.all(cm.pair_counts == 4)


def test_correlation_matrix_missing_and_constant_cells():
    panel = _panel({"a": [1.0, 2.0, 3.0], "k": [5.0, 5.0, 5.0], "m": [1.0, None, None]})
    cm = correlation_matrix(panel, ["a", "k", "m"])
    assert cm.get("a", "k") is None and cm.reasons[(0, 1)] == "ZeroVariance"
    assert cm.get("a", "m") is None and cm.reasons[(0, 2)] == "TooFewPairs"
    assert cm.pair_counts[0, 2] == 1
    assert cm.get("k", "k") is None


def test_correlation_matrix_unknown_column():
    with pytest.raises(UnknownColumn):
        correlation_matrix(_panel({"a": [1.0, 2.0]}), ["a", "zzz"])


def test_correlation_csv_export(tmp_path):
    panel = _panel({"a": [1.0, 2.0, 3.0], "k": [5.0, 5.0, 5.0]})
    correlation_matrix(panel, ["a", "k"]).to_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines() == [",a,k", "a,1,", "k,,"]


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 40), st.integers(0, 10_000))
def test_correlation_matrix_equals_scalar_pearson(n, seed):
    rng = np.random.default_rng(seed)
    cols = {f"x{j}": [None if rng.random() < 0.15 else float(v) for v in rng.normal(size=n)]
            for j in range(4)}
    panel = _panel(cols)
    cm = correlation_matrix(panel, list(cols))
    for i, a in enumerate(cols):
        for j, b in enumerate(cols):
            try:
                expected = pearson(cols[a], cols[b])
            except (TooFewPairs, ZeroVariance):
                assert math.isnan(cm.values[i, j])
                continue
            assert cm.values[i, j] == pytest.approx(expected, abs=1e-12)


def test_ols_examples():
    m = ols_fit([0, 1], [1, 3])
    assert (m.slope, m.intercept) == pytest.approx((2.0, 1.0))
    m = ols_fit([0, 1, 2], [0, 1, 2])
    assert (m.slope, m.intercept, m.r_squared) == pytest.approx((1.0, 0.0, 1.0))
    # normal equations: xbar 1, ybar 1/3, Sxy 0 -> slope 0, intercept 1/3
    m = ols_fit([0, 1, 2], [0, 1, 0])
    assert m.slope == pytest.approx(0.0, abs=1e-15)
    assert m.intercept == pytest.approx(1 / 3)


def test_ols_errors():
    with pytest.raises(ZeroVariance):
        ols_fit([1, 1, 1], [1, 2, 3])
    with pytest.raises(TooFewPairs):
        ols_fit([1], [1])


def test_ols_forecast():
    m = OlsModel(slope=2.0, intercept=1.0, n=2, r_squared=1.0)
    assert ols_forecast(m, [3]) == [(3, 7.0)]
    fc = ols_forecast(m, [2019, 2020, 2021])
    assert [b[1] - a[1] for a, b in zip(fc, fc[1:])] == [2.0, 2.0]
    fit = ols_fit([2000, 2001, 2002, 2003], [5.0, 7.0, 6.0, 9.0])
    assert ols_forecast(fit, [2001])[0][1] == pytest.approx(fit.predict([2001])[0])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 100_000))
def test_ols_properties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 60))
    x = rng.normal(size=n) * rng.uniform(0.1, 100) + rng.uniform(-1e3, 1e3)
    y = rng.normal(size=n) * rng.uniform(0.1, 100) + 0.5 * x
    m = ols_fit(x, y)
    resid = y - m.predict(x)
    assert abs(resid.sum()) <= 1e-9 * np.abs(y).sum()
    assert r_squared(y, m.predict(x)) == pytest.approx(pearson(x, y) ** 2, abs=1e-9)
    assert 0.0 <= m.r_squared <= 1.0


def test_r_squared_examples():
    a = [1.0, 2.0, 3.0]
    assert r_squared(a, a) == 1.0
    assert r_squared(a, [2.0, 2.0, 2.0]) == 0.0
    assert r_squared(a, [1.0, 2.0, 2.0]) == pytest.approx(0.5)
    assert r_squared(a, [3.0, 2.0, 1.0]) < 0


def test_r_squared_errors():
    with pytest.raises(ZeroVariance):
        r_squared([2.0, 2.0], [1.0, 3.0])
    with pytest.raises(LengthMismatch):
        r_squared([1.0, 2.0], [1.0])
