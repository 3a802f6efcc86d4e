"""Hour-by-weekday aggregation grids and 24-hour clock point sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySeries, InvalidConfig, NoBeatsOnDay
from .timeseries import RrSeries

DAY_NAMES = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
METRICS = ("mean_bpm", "rmssd_ms")


@dataclass(frozen=True)
class WeekGrid:
    """7x24 grid; row 0 is Monday. Missing cells hold NaN and are never 0.0."""

    metric: str
    values: np.ndarray
    counts: np.ndarray

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def to_json(self) -> dict:
        days = []
        for d in range(7):
            hours = []
            for h in range(24):
                v = self.values[d, h]
                hours.append(
                    {
                        "hour": h,
                        "value": None if np.isnan(v) else float(v),
                        "count": int(self.counts[d, h]),
                    }
                )
            days.append({"day": DAY_NAMES[d], "hours": hours})
        return {"metric": self.metric, "days": days}


@dataclass(frozen=True)
class ClockPoints:
    day_label: str
    angles: np.ndarray  # radians in [0, 2pi)
    radii: np.ndarray  # [0, 1]
    rr_ms: np.ndarray


def _local_parts(series: RrSeries, utc_offset_h: float):
    local = series.timestamps + utc_offset_h * 3600.0
    day_number = np.floor(local / 86400.0)
    weekday = ((day_number + 3) % 7).astype(int)  # 0 = Monday
    hour = np.floor((local - day_number * 86400.0) / 3600.0).astype(int)
    return day_number.astype(np.int64), weekday, np.minimum(hour, 23), local


def week_grid(series: RrSeries, metric: str = "mean_bpm", utc_offset_h: float = 0.0) -> WeekGrid:
    """Aggregate beats into weekday x hour cells by their local timestamp.

    ``mean_bpm`` is 60000 / mean RR of the cell. ``rmssd_ms`` uses successive
    differences between beats that are consecutive in the series and fall in
    the same cell; a cell with fewer than two beats has no RMSSD.
    """
    if metric not in METRICS:
        raise InvalidConfig(f"unknown metric {metric!r}")
    if len(series) == 0:
        raise EmptySeries("no beats")
    _, weekday, hour, _ = _local_parts(series, utc_offset_h)
    cell = weekday * 24 + hour
    rr = series.intervals

    counts = np.bincount(cell, minlength=168).astype(float)
    values = np.full(168, np.nan)
    if metric == "mean_bpm":
        sums = np.bincount(cell, weights=rr, minlength=168)
        has = counts > 0
        values[has] = 60000.0 / (sums[has] / counts[has])
    else:
        same = cell[1:] == cell[:-1]
        d = np.diff(rr)[same]
        c = cell[1:][same]
        n_diff = np.bincount(c, minlength=168)
        sq = np.bincount(c, weights=d * d, minlength=168)
        has = n_diff > 0
        values[has] = np.sqrt(sq[has] / n_diff[has])
    return WeekGrid(metric, values.reshape(7, 24), counts.reshape(7, 24).astype(int))


def local_days(series: RrSeries, utc_offset_h: float = 0.0) -> list[int]:
    """Distinct local day numbers (days since epoch) present in the series."""
    day_number, *_ = _local_parts(series, utc_offset_h)
    return np.unique(day_number).tolist()


def clock_points(series: RrSeries, day_index: int, utc_offset_h: float = 0.0) -> ClockPoints:
    """Beats of the ``day_index``-th local calendar day (0 = first day of the series).

    Angle is the local time of day on a 24-hour dial; radius is the RR value
    min-max normalised over that day, 0.5 for all beats when the day's RR
    range is zero.
    """
    if len(series) == 0:
        raise NoBeatsOnDay("series is empty")
    day_number, weekday, _, local = _local_parts(series, utc_offset_h)
    target = int(day_number[0]) + int(day_index)
    sel = day_number == target
    if not sel.any():
        raise NoBeatsOnDay(f"no beats on day {day_index}")
    seconds = local[sel] - target * 86400.0
    angles = 2.0 * np.pi * seconds / 86400.0
    rr = series.intervals[sel]
    lo, hi = rr.min(), rr.max()
    radii = np.full(rr.size, 0.5) if hi == lo else (rr - lo) / (hi - lo)
    iso = np.datetime64(int(target), "D")
    label = f"{DAY_NAMES[int(weekday[sel][0])]} {iso}"
    return ClockPoints(label, angles, radii, rr.copy())
