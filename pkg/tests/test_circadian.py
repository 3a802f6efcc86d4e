import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrvis.circadian import DAY_NAMES, clock_points, week_grid
from hrvis.errors import EmptySeries, InvalidConfig, NoBeatsOnDay
from hrvis.timeseries import DEFAULT_START_EPOCH, RrSeries

MONDAY = DEFAULT_START_EPOCH


def test_constant_week_every_cell_60():
    s = RrSeries(MONDAY, np.full(7 * 86400, 1000.0))
    g = week_grid(s, "mean_bpm")
    assert not g.missing.any()
    assert np.all(g.values == 60.0)
    assert g.counts.sum() == len(s)


def test_single_cell_monday_midnight():
    s = RrSeries(MONDAY, np.full(3000, 1000.0) * 1.1)
    g = week_grid(s)
    assert (~g.missing).sum() == 1 and not g.missing[0, 0]
    assert np.isnan(g.values[3, 5])


def test_rmssd_grid_cell():
    rr = np.tile([800.0, 860.0], 1000)
    g = week_grid(RrSeries(MONDAY, rr), "rmssd_ms")
    assert g.values[0, 0] == pytest.approx(60.0)


def test_trough_in_early_morning(default_week):
    g = week_grid(default_week, "mean_bpm")
    hits = sum(2 <= int(np.nanargmin(g.values[d])) <= 6 for d in range(7))
    assert hits >= 6


def test_grid_json_shape(default_week):
    js = week_grid(default_week).to_json()
    assert js["metric"] == "mean_bpm"
    assert [d["day"] for d in js["days"]] == list(DAY_NAMES)
    assert all(len(d["hours"]) == 24 for d in js["days"])


def test_missing_cells_are_null():
    js = week_grid(RrSeries(MONDAY, [1000.0] * 10)).to_json()
    assert js["days"][1]["hours"][0] == {"hour": 0, "value": None, "count": 0}


def test_errors():
    with pytest.raises(EmptySeries):
        week_grid(RrSeries(0, []))
    with pytest.raises(InvalidConfig):
        week_grid(RrSeries(0, [1000.0]), "median")


@given(st.lists(st.floats(300, 2000), min_size=1, max_size=500), st.floats(0, 6 * 86400), st.sampled_from([-5.0, 0.0, 5.5]))
def test_counts_sum_to_beats(rr, start, offset):
    s = RrSeries(MONDAY + start, rr)
    assert week_grid(s, "mean_bpm", offset).counts.sum() == len(s)


@given(st.floats(300, 2000), st.integers(1, 300))
def test_constant_series_constant_grid(rr, n):
    g = week_grid(RrSeries(MONDAY, [rr] * n))
    vals = g.values[~g.missing]
    assert np.all(vals == 60000.0 / rr) or np.allclose(vals, 60000.0 / rr, rtol=1e-15)


def test_clock_noon_angle():
    # one beat exactly at local noon
    s = RrSeries(MONDAY + 12 * 3600 - 1.0, [1000.0, 1100.0])
    c = clock_points(s, 0)
    assert c.angles[0] == pytest.approx(math.pi)
    assert c.day_label == "Monday 2024-01-01"


def test_clock_constant_day_radius_half():
    c = clock_points(RrSeries(MONDAY, [900.0] * 50), 0)
    assert np.all(c.radii == 0.5)


def test_clock_radius_minmax():
    c = clock_points(RrSeries(MONDAY, [600.0, 1200.0, 900.0]), 0)
    np.testing.assert_allclose(c.radii, [0.0, 1.0, 0.5])


def test_clock_missing_day():
    with pytest.raises(NoBeatsOnDay):
        clock_points(RrSeries(MONDAY, [1000.0] * 10), 3)


@given(st.lists(st.floats(300, 2000), min_size=2, max_size=200), st.floats(1.0, 3.0))
def test_clock_coordinate_separation(rr, scale):
    a = clock_points(RrSeries(MONDAY, rr), 0)
    b = clock_points(RrSeries(MONDAY, rr), 0)
    np.testing.assert_array_equal(a.angles, b.angles)
    assert np.all((a.radii >= 0) & (a.radii <= 1))
    assert np.all((a.angles >= 0) & (a.angles < 2 * math.pi))
    # scaling RR values around the mean keeps min-max radii
    rr = np.asarray(rr)
    scaled = clock_points(RrSeries(MONDAY, rr * scale), 0)
    n = min(a.radii.size, scaled.radii.size)
    if np.ptp(rr[:n]) > 0 and a.radii.size == scaled.radii.size:
        np.testing.assert_allclose(scaled.radii, a.radii, atol=1e-12)
