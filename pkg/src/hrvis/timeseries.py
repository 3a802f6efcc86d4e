"""RR / HR series types, CSV ingest and export, cleaning, resampling."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (
    AllBeatsRejected,
    EmptySeries,
    InvalidConfig,
    MalformedHeader,
    NonMonotonicTimestamp,
    NonPositiveInterval,
    RowError,
)

RR_HEADER = ("timestamp", "rr_interval_ms", "heart_rate_bpm")
HR_HEADER = ("time_s", "time_min", "heart_rate_bpm", "timestamp")

# 2024-01-01 is a Monday; synthetic data starts here unless told otherwise.
DEFAULT_START_EPOCH = 1704067200.0


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RrSeries:
    """Beat-to-beat intervals anchored at ``start_epoch``.

    Beat ``k`` occurs ``sum(intervals[:k+1]) / 1000`` seconds after
    ``start_epoch``. Relative beat times are kept in :attr:`offsets`; absolute
    epoch floats lose sub-microsecond resolution, so invariant checks and all
    numerics use offsets.
    """

    start_epoch: float
    intervals: np.ndarray
    offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rr = _frozen(self.intervals)
        if rr.ndim != 1:
            raise ValueError("intervals must be one-dimensional")
        if rr.size and not np.all(rr > 0):
            bad = int(np.argmax(~(rr > 0)))
            raise NonPositiveInterval(bad, f"interval {rr[bad]!r} is not positive")
        object.__setattr__(self, "intervals", rr)
        object.__setattr__(self, "start_epoch", float(self.start_epoch))
        object.__setattr__(self, "offsets", _frozen(np.cumsum(rr) / 1000.0))

    @property
    def timestamps(self) -> np.ndarray:
        return self.start_epoch + self.offsets

    @property
    def duration_s(self) -> float:
        return float(self.offsets[-1]) if len(self) else 0.0

    def __len__(self) -> int:
        return int(self.intervals.size)

    def __eq__(self, other):
        if not isinstance(other, RrSeries):
            return NotImplemented
        return self.start_epoch == other.start_epoch and np.array_equal(
            self.intervals, other.intervals
        )

    __hash__ = None


@dataclass(frozen=True)
class HrSeries:
    sample_times: np.ndarray
    bpm: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sample_times", _frozen(self.sample_times))
        object.__setattr__(self, "bpm", _frozen(self.bpm))


@dataclass(frozen=True)
class CleaningPolicy:
    min_rr_ms: float = 300.0
    max_rr_ms: float = 2000.0
    max_relative_jump: float = 0.2
    median_window: int = 11

    def __post_init__(self):
        if not 0 < self.min_rr_ms < self.max_rr_ms:
            raise InvalidConfig("need 0 < min_rr_ms < max_rr_ms")
        if self.max_relative_jump <= 0:
            raise InvalidConfig("max_relative_jump must be positive")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise InvalidConfig("median_window must be a positive odd integer")


@dataclass(frozen=True)
class Rejection:
    index: int
    reason: str
    value_ms: float


# --------------------------------------------------------------------------
# timestamps


def format_timestamp(t: float) -> str:
    """ISO-8601 UTC with a ``Z`` suffix; milliseconds only when non-zero."""
    ms = int(round(t * 1000.0))
    secs, frac = divmod(ms, 1000)
    base = datetime.fromtimestamp(secs, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")
    return f"{base}.{frac:03d}Z" if frac else f"{base}Z"


def parse_timestamp(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    dt = datetime.fromisoformat(iso)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


# --------------------------------------------------------------------------
# CSV


def parse_rr_csv(text: str) -> RrSeries:
    """Parse an RR CSV document. The bpm column is ignored; RR is authoritative.

    Row numbers in errors are 1-based file line numbers (the header is line 1).
    """
    reader = csv.reader(io.StringIO(text.lstrip("﻿")))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeader("empty document") from None
    if tuple(h.strip() for h in header) != RR_HEADER:
        raise MalformedHeader(f"expected header {','.join(RR_HEADER)!r}, got {header!r}")

    stamps: list[float] = []
    rr: list[float] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise MalformedHeader(f"line {line_no}: expected 3 columns")
        try:
            value = float(row[1])
            t = parse_timestamp(row[0])
        except ValueError:
            raise RowError(line_no, f"unparseable values {row[:2]!r}") from None
        if not value > 0 or not math.isfinite(value):
            raise NonPositiveInterval(line_no, f"rr_interval_ms={row[1].strip()}")
        if stamps and not t > stamps[-1]:
            raise NonMonotonicTimestamp(line_no, f"timestamp {row[0].strip()} not increasing")
        stamps.append(t)
        rr.append(value)

    if not rr:
        return RrSeries(0.0, np.empty(0))
    return RrSeries(stamps[0] - rr[0] / 1000.0, np.asarray(rr))


def export_rr_csv(series: RrSeries) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(RR_HEADER)
    for t, rr in zip(series.timestamps, series.intervals):
        writer.writerow((format_timestamp(t), f"{rr:.3f}", f"{60000.0 / rr:.3f}"))
    return out.getvalue()


def export_hr_csv(hr: HrSeries) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(HR_HEADER)
    t0 = hr.sample_times[0] if hr.sample_times.size else 0.0
    for t, bpm in zip(hr.sample_times, hr.bpm):
        rel = t - t0
        writer.writerow((f"{rel:.3f}", f"{rel / 60.0:.4f}", f"{bpm:.3f}", format_timestamp(t)))
    return out.getvalue()


# --------------------------------------------------------------------------
# cleaning


def _jump_rejects(rr: np.ndarray, window: int, max_jump: float) -> np.ndarray:
    """Boolean mask of beats deviating from the centred running median."""
    half = window // 2
    padded = np.pad(rr, half, mode="constant", constant_values=np.nan)
    views = np.lib.stride_tricks.sliding_window_view(padded, window)
    med = np.nanmedian(views, axis=1)
    return np.abs(rr - med) / med > max_jump


def clean_rr(series: RrSeries, policy: CleaningPolicy = CleaningPolicy()):
    """Drop out-of-range beats and beats jumping away from the running median.

    The jump test is repeated on the surviving beats until nothing more is
    rejected, which makes cleaning idempotent. Returns ``(series, rejections)``
    with rejection indices referring to the input series.
    """
    if len(series) == 0:
        raise EmptySeries("cannot clean an empty series")
    rr = series.intervals
    rejections: list[Rejection] = []

    idx = np.arange(rr.size)
    for i in idx[rr < policy.min_rr_ms]:
        rejections.append(Rejection(int(i), "below_min_rr", float(rr[i])))
    for i in idx[rr > policy.max_rr_ms]:
        rejections.append(Rejection(int(i), "above_max_rr", float(rr[i])))
    keep = idx[(rr >= policy.min_rr_ms) & (rr <= policy.max_rr_ms)]

    while keep.size:
        bad = _jump_rejects(rr[keep], policy.median_window, policy.max_relative_jump)
        if not bad.any():
            break
        for i in keep[bad]:
            rejections.append(Rejection(int(i), "relative_jump", float(rr[i])))
        keep = keep[~bad]

    if keep.size == 0:
        raise AllBeatsRejected(f"all {rr.size} beats rejected")
    rejections.sort(key=lambda r: r.index)
    if keep.size == rr.size:
        return series, rejections
    return RrSeries(series.start_epoch, rr[keep]), rejections


# --------------------------------------------------------------------------
# HR derivation


def derive_hr(series: RrSeries, grid_step_s: float = 60.0) -> HrSeries:
    """Heart rate on a uniform grid from linearly interpolated RR."""
    if not grid_step_s > 0:
        raise InvalidConfig("grid_step_s must be positive")
    if len(series) == 0:
        raise EmptySeries("no beats")
    offs = series.offsets
    n = int(math.floor((offs[-1] - offs[0]) / grid_step_s + 1e-9)) + 1
    rel = offs[0] + grid_step_s * np.arange(n)
    rr = np.interp(rel, offs, series.intervals)
    return HrSeries(series.start_epoch + rel, 60000.0 / rr)
