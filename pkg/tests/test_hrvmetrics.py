import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import brute_sd
from hrvis.errors import InvalidConfig, SeriesTooShort, TooFewBeats, TooFewRows
from hrvis.hrvmetrics import (
    FEATURE_COLUMNS,
    WEEKEND_COLUMN,
    FeatureMatrix,
    WindowSpec,
    pnn50,
    rmssd,
    sdnn,
    standardize,
    window_features,
)
from hrvis.poincare import poincare_pairs, sd1_sd2
from hrvis.timeseries import RrSeries

windows = st.lists(st.floats(300.0, 2000.0), min_size=2, max_size=400)

SATURDAY = 1704499200.0  # 2024-01-06 00:00 UTC


def brute_rmssd(x):
    d = [b - a for a, b in zip(x, x[1:])]
    return math.sqrt(sum(v * v for v in d) / len(d))


def brute_pnn50(x):
    d = [abs(b - a) for a, b in zip(x, x[1:])]
    return sum(v > 50 for v in d) / len(d)


def test_sdnn_examples():
    assert sdnn([1000, 1000, 1000]) == 0.0
    assert sdnn([800, 1000]) == pytest.approx(100.0, abs=1e-12)


def test_rmssd_examples():
    assert rmssd([900] * 10) == 0.0
    assert rmssd([800, 860] * 20) == pytest.approx(60.0, abs=1e-12)


def test_pnn50_examples():
    assert pnn50([900] * 10) == 0.0
    assert pnn50([800, 860] * 20) == 1.0
    assert pnn50([800, 850] * 20) == 0.0


@pytest.mark.parametrize("f", [sdnn, rmssd, pnn50])
def test_too_few_beats(f):
    with pytest.raises(TooFewBeats):
        f([900])


@given(windows)
def test_statistics_match_brute_force(w):
    assert sdnn(w) == pytest.approx(brute_sd(w), abs=1e-9, rel=1e-12)
    assert rmssd(w) == pytest.approx(brute_rmssd(w), abs=1e-9, rel=1e-12)
    assert pnn50(w) == brute_pnn50(w)


@given(windows)
def test_rmssd_equals_sqrt2_sd1(w):
    sd1 = sd1_sd2(poincare_pairs(np.asarray(w)), level=None).sd1_ms
    assert rmssd(w) == pytest.approx(math.sqrt(2.0) * sd1, abs=1e-9)


def test_window_count_on_week(default_week):
    spec = WindowSpec()
    fm = window_features(default_week, spec)
    duration = default_week.offsets[-1] - default_week.offsets[0]
    assert len(fm) + len(fm.dropped) == math.floor((duration - 300) / 30) + 1


def test_feature_invariants(default_week):
    fm = window_features(default_week)
    assert fm.values.shape[1] == len(FEATURE_COLUMNS)
    assert np.all(fm.column("var_rr_ms2") >= 0)
    assert np.all(fm.column("range_rr_ms") >= 0)
    p = fm.column("pnn50")
    assert np.all((p >= 0) & (p <= 1))
    np.testing.assert_allclose(fm.column("hour_sin") ** 2 + fm.column("hour_cos") ** 2, 1.0, atol=1e-9)
    assert set(np.unique(fm.column("is_weekend"))) == {0.0, 1.0}


def test_saturday_all_weekend():
    s = RrSeries(SATURDAY, [800.0] * 3000)
    fm = window_features(s)
    assert np.all(fm.column("is_weekend") == 1.0)


def test_hour_encoding_at_six():
    # first beat at 05:57:30 so the first window's midpoint is 06:00
    start = SATURDAY + 5 * 3600 + 57.5 * 60 - 1.0
    fm = window_features(RrSeries(start, [1000.0] * 700))
    assert fm.column("hour_sin")[0] == pytest.approx(math.sin(2 * math.pi * 6 / 24), abs=1e-12)
    assert fm.column("hour_cos")[0] == pytest.approx(math.cos(2 * math.pi * 6 / 24), abs=1e-12)


def test_sparse_windows_dropped():
    # 20 beats then a 10-minute gap then more beats
    rr = [1000.0] * 400 + [600000.0] + [1000.0] * 400
    fm = window_features(RrSeries(0.0, rr))
    assert len(fm.dropped) > 0
    assert all(np.all(r) for r in np.isfinite(fm.values))


def test_too_short():
    with pytest.raises(SeriesTooShort):
        window_features(RrSeries(0.0, [1000.0] * 100))
    with pytest.raises(InvalidConfig):
        WindowSpec(length_s=30, step_s=60)


def test_shift_by_step_shifts_rows(rng):
    rr = rng.uniform(700, 1000, 4000)
    rr[0] = 1000.0
    base = window_features(RrSeries(SATURDAY, rr), WindowSpec(300, 30))
    # 30 extra one-second beats in front move every window one step later
    rr2 = np.concatenate([[1000.0] * 30, rr])
    shifted = window_features(RrSeries(SATURDAY - 30.0, rr2), WindowSpec(300, 30))
    assert len(shifted) == len(base) + 1
    np.testing.assert_allclose(shifted.values[1:], base.values, rtol=1e-12, atol=1e-9)


def _fm(values):
    values = np.asarray(values, dtype=float)
    return FeatureMatrix(np.arange(len(values), dtype=float), values)


def test_standardize_two_rows():
    x = np.zeros((2, len(FEATURE_COLUMNS)))
    x[:, 0] = [0.0, 2.0]
    out = standardize(_fm(x))
    np.testing.assert_array_equal(out.values[:, 0], [-1.0, 1.0])


def test_standardize_constant_column_sentinel():
    x = np.zeros((3, len(FEATURE_COLUMNS)))
    x[:, 0] = [1.0, 2.0, 3.0]
    x[:, 1] = 7.0
    out = standardize(_fm(x))
    assert np.all(out.values[:, 1] == 0.0)
    assert out.sd[1] == 0.0


def test_standardize_errors():
    with pytest.raises(TooFewRows):
        standardize(_fm(np.zeros((1, len(FEATURE_COLUMNS)))))


@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_standardize_properties(n, seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n, len(FEATURE_COLUMNS))) * r.uniform(0.1, 100, len(FEATURE_COLUMNS))
    x[:, WEEKEND_COLUMN] = r.integers(0, 2, n)
    out = standardize(_fm(x))
    numeric = [i for i in range(len(FEATURE_COLUMNS)) if i != WEEKEND_COLUMN and out.sd[i] > 0]
    np.testing.assert_allclose(out.values[:, numeric].mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(out.values[:, numeric].std(axis=0), 1.0, atol=1e-9)
    np.testing.assert_array_equal(out.values[:, WEEKEND_COLUMN], x[:, WEEKEND_COLUMN])
    again = standardize(out)
    np.testing.assert_allclose(again.values, out.values, atol=1e-9)
    np.testing.assert_allclose(out.inverse_transform(out.values)[:, numeric], x[:, numeric], rtol=1e-9, atol=1e-9)


def test_feature_csv_header(default_week):
    text = window_features(default_week).to_csv()
    assert text.split("\r\n", 1)[0] == "window_start,mean_rr_ms,var_rr_ms2,range_rr_ms,rmssd_ms,pnn50,hour_sin,hour_cos,is_weekend"
