"""Time-domain HRV statistics and windowed feature extraction."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, SeriesTooShort, TooFewBeats, TooFewRows
from .timeseries import RrSeries

FEATURE_COLUMNS = (
    "mean_rr_ms",
    "var_rr_ms2",
    "range_rr_ms",
    "rmssd_ms",
    "pnn50",
    "hour_sin",
    "hour_cos",
    "is_weekend",
)
WEEKEND_COLUMN = FEATURE_COLUMNS.index("is_weekend")
MIN_BEATS_PER_WINDOW = 10


def _window(rr) -> np.ndarray:
    rr = np.asarray(rr, dtype=float)
    if rr.size < 2:
        raise TooFewBeats(f"need at least 2 beats, got {rr.size}")
    return rr


def sdnn(rr) -> float:
    """Population standard deviation of the intervals (ms)."""
    return float(np.std(_window(rr)))


def rmssd(rr) -> float:
    d = np.diff(_window(rr))
    return float(np.sqrt(np.mean(d * d)))


def pnn50(rr) -> float:
    """Fraction of successive differences strictly above 50 ms."""
    d = np.abs(np.diff(_window(rr)))
    return float(np.count_nonzero(d > 50.0) / d.size)


@dataclass(frozen=True)
class WindowSpec:
    length_s: float = 300.0
    step_s: float = 30.0

    def __post_init__(self):
        if not 0 < self.step_s <= self.length_s:
            raise InvalidConfig("need 0 < step_s <= length_s")

    def count(self, duration_s: float) -> int:
        if duration_s < self.length_s:
            return 0
        return int(np.floor((duration_s - self.length_s) / self.step_s + 1e-9)) + 1


@dataclass
class FeatureMatrix:
    """Rows of per-window features in :data:`FEATURE_COLUMNS` order.

    ``window_starts`` are epoch seconds. After :func:`standardize`, ``mean``
    and ``sd`` hold the per-column parameters (sd 0 marks a constant column).
    """

    window_starts: np.ndarray
    values: np.ndarray
    standardized: bool = False
    mean: np.ndarray | None = None
    sd: np.ndarray | None = None
    dropped: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def column(self, name: str) -> np.ndarray:
        return self.values[:, FEATURE_COLUMNS.index(name)]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\r\n")
        w.writerow(("window_start",) + FEATURE_COLUMNS)
        for t, row in zip(self.window_starts, self.values):
            w.writerow([f"{t:.3f}"] + [f"{v:.9g}" for v in row[:-1]] + [f"{row[-1]:g}"])
        return out.getvalue()

    def inverse_transform(self, values: np.ndarray) -> np.ndarray:
        if not self.standardized:
            return np.array(values, dtype=float)
        sd = np.where(self.sd > 0, self.sd, 1.0)
        out = np.array(values, dtype=float) * sd + self.mean
        out[:, WEEKEND_COLUMN] = values[:, WEEKEND_COLUMN]
        return out


def local_hour_and_weekend(epoch: np.ndarray, utc_offset_h: float = 0.0):
    """Fractional local hour of day and weekend flag for epoch seconds."""
    local = np.asarray(epoch, dtype=float) + utc_offset_h * 3600.0
    days = np.floor(local / 86400.0)
    hour = (local - days * 86400.0) / 3600.0
    weekday = (days + 3) % 7  # 1970-01-01 was a Thursday
    return hour, weekday >= 5


def window_features(
    series: RrSeries, spec: WindowSpec = WindowSpec(), utc_offset_h: float = 0.0
) -> FeatureMatrix:
    """One feature vector per window position, anchored at the first beat.

    Windows holding fewer than 10 beats are dropped; their start times are
    listed in ``FeatureMatrix.dropped``.
    """
    if len(series) < 2:
        raise SeriesTooShort("series has fewer than two beats")
    offs = series.offsets
    duration = float(offs[-1] - offs[0])
    n = spec.count(duration)
    if n == 0:
        raise SeriesTooShort(f"series spans {duration:.1f} s < window {spec.length_s} s")

    rel_starts = offs[0] + spec.step_s * np.arange(n)
    lo = np.searchsorted(offs, rel_starts, side="left")
    hi = np.searchsorted(offs, rel_starts + spec.length_s, side="left")
    counts = hi - lo
    keep = counts >= MIN_BEATS_PER_WINDOW

    rr = series.intervals
    d = np.diff(rr)
    rows = []
    for a, b in zip(lo[keep], hi[keep]):
        w = rr[a:b]
        dw = d[a : b - 1]
        rows.append(
            (
                w.mean(),
                w.var(),
                w.max() - w.min(),
                np.sqrt(np.mean(dw * dw)),
                np.count_nonzero(np.abs(dw) > 50.0) / dw.size,
            )
        )
    stats = np.array(rows, dtype=float).reshape(-1, 5)

    starts = series.start_epoch + rel_starts
    mids = starts[keep] + spec.length_s / 2.0
    hour, weekend = local_hour_and_weekend(mids, utc_offset_h)
    angle = 2.0 * np.pi * hour / 24.0
    values = np.column_stack([stats, np.sin(angle), np.cos(angle), weekend.astype(float)])
    return FeatureMatrix(
        window_starts=starts[keep],
        values=values,
        dropped=[float(t) for t in starts[~keep]],
    )


def standardize(matrix: FeatureMatrix, weekend_weight: float = 1.0) -> FeatureMatrix:
    """Z-score every column except ``is_weekend``, which is only weighted."""
    if len(matrix) < 2:
        raise TooFewRows("need at least two rows to standardize")
    x = matrix.values
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x)
    # float round-off gives constant columns a tiny nonzero sd
    varying = sd > 1e-12 * np.maximum(1.0, np.abs(mean))
    out[:, varying] = (x[:, varying] - mean[varying]) / sd[varying]
    sd = np.where(varying, sd, 0.0)
    out[:, WEEKEND_COLUMN] = x[:, WEEKEND_COLUMN] * weekend_weight
    mean[WEEKEND_COLUMN] = 0.0
    sd[WEEKEND_COLUMN] = 1.0
    return FeatureMatrix(
        window_starts=matrix.window_starts.copy(),
        values=out,
        standardized=True,
        mean=mean,
        sd=sd,
        dropped=list(matrix.dropped),
    )
