"""Seeded generator of multi-day RR series.

Heart rate is modelled in bpm as a baseline plus a circadian cosine plus
exercise bouts; beats are emitted by integrate-and-fire over that rate, and
each RR interval then receives respiratory sinus arrhythmia and white noise
in the millisecond domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidConfig, ScheduleInfeasible
from .timeseries import DEFAULT_START_EPOCH, RrSeries

DAY_S = 86400.0
ONSET_S = 300.0
RECOVERY_TAU_S = 120.0
# integration step for the rate integral; HR changes on minute scales
STEP_S = 0.25
BOUT_WINDOW_H = (7.0, 21.0)
MAX_PLACEMENT_ATTEMPTS = 100


@dataclass(frozen=True)
class GeneratorConfig:
    days: int = 7
    baseline_bpm: float = 62.0
    circadian_amplitude_bpm: float = 10.0
    circadian_trough_hour: float = 4.0
    rsa_amplitude_ms: float = 35.0
    respiratory_hz: float = 0.25
    exercise_bouts_per_day: float = 1.0
    exercise_peak_delta_bpm: float = 55.0
    exercise_duration_min: tuple[float, float] = (20.0, 60.0)
    noise_sd_ms: float = 8.0
    weekend_shift_hours: float = 1.5
    seed: int = 0
    start_epoch: float = DEFAULT_START_EPOCH

    def __post_init__(self):
        if int(self.days) != self.days or self.days < 1:
            raise InvalidConfig("days must be a positive integer")
        if self.baseline_bpm <= 0:
            raise InvalidConfig("baseline_bpm must be positive")
        for name in (
            "circadian_amplitude_bpm",
            "rsa_amplitude_ms",
            "exercise_bouts_per_day",
            "exercise_peak_delta_bpm",
            "noise_sd_ms",
        ):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        if not 0 < self.respiratory_hz < 0.5:
            raise InvalidConfig("respiratory_hz must lie in (0, 0.5)")
        lo, hi = self.exercise_duration_min
        if not 0 < lo <= hi:
            raise InvalidConfig("exercise_duration_min must satisfy 0 < lo <= hi")
        if self.baseline_bpm <= self.circadian_amplitude_bpm:
            raise InvalidConfig("circadian amplitude would drive heart rate to zero")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_mapping(cls, values: dict) -> "GeneratorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise InvalidConfig(f"unknown generator keys: {sorted(unknown)}")
        values = dict(values)
        if "exercise_duration_min" in values:
            values["exercise_duration_min"] = tuple(float(v) for v in values["exercise_duration_min"])
        return cls(**values)


@dataclass(frozen=True)
class Bout:
    start_s: float
    duration_s: float
    peak_delta_bpm: float


def _seeds(seed) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    sched, noise = ss.spawn(2)
    return sched, noise


def bout_schedule(config: GeneratorConfig, seed=None) -> list[Bout]:
    """Random exercise bouts, times in seconds from ``config.start_epoch``.

    Per day the count is Poisson(``exercise_bouts_per_day``); starts are
    uniform in 07:00-21:00 and a colliding bout is redrawn, at most 100 times.
    """
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    lo_min, hi_min = config.exercise_duration_min
    day_lo, day_hi = (h * 3600.0 for h in BOUT_WINDOW_H)
    bouts: list[Bout] = []
    for day in range(int(config.days)):
        count = int(rng.poisson(config.exercise_bouts_per_day))
        placed: list[tuple[float, float]] = []
        for _ in range(count):
            for _attempt in range(MAX_PLACEMENT_ATTEMPTS):
                dur = float(rng.uniform(lo_min, hi_min)) * 60.0
                start = float(rng.uniform(day_lo, day_hi))
                if all(start + dur <= s or start >= s + d for s, d in placed):
                    break
            else:
                raise ScheduleInfeasible(
                    f"could not place {count} non-overlapping bouts on day {day}"
                )
            placed.append((start, dur))
            peak = config.exercise_peak_delta_bpm * float(rng.uniform(0.7, 1.0))
            bouts.append(Bout(day * DAY_S + start, dur, peak))
    bouts.sort(key=lambda b: b.start_s)
    return bouts


def _is_weekend(t: np.ndarray, start_epoch: float) -> np.ndarray:
    days = np.floor((start_epoch + t) / DAY_S)
    # 1970-01-01 was a Thursday (weekday 3)
    weekday = (days + 3) % 7
    return weekday >= 5


def instantaneous_hr(config: GeneratorConfig, t: np.ndarray, bouts: list[Bout]) -> np.ndarray:
    """Heart rate in bpm at times ``t`` (seconds from ``config.start_epoch``)."""
    t = np.asarray(t, dtype=float)
    abs_t = config.start_epoch + t
    hour = np.mod(abs_t, DAY_S) / 3600.0
    trough = config.circadian_trough_hour + np.where(
        _is_weekend(t, config.start_epoch), config.weekend_shift_hours, 0.0
    )
    hr = config.baseline_bpm - config.circadian_amplitude_bpm * np.cos(
        2.0 * np.pi * (hour - trough) / 24.0
    )
    for b in bouts:
        hr = hr + b.peak_delta_bpm * bout_envelope(t - b.start_s, b.duration_s)
    return hr


def bout_envelope(dt: np.ndarray, duration_s: float) -> np.ndarray:
    """Unit exercise envelope: 5-minute linear onset, plateau, exponential recovery."""
    dt = np.asarray(dt, dtype=float)
    onset = min(ONSET_S, duration_s)
    env = np.zeros_like(dt)
    rising = (dt >= 0) & (dt < onset)
    env[rising] = dt[rising] / onset
    env[(dt >= onset) & (dt < duration_s)] = 1.0
    tail = dt >= duration_s
    env[tail] = np.exp(-(dt[tail] - duration_s) / RECOVERY_TAU_S)
    return env


def integrate_and_fire(hr_bpm: np.ndarray, step_s: float) -> np.ndarray:
    """Beat times (s) where the running integral of HR/60 crosses each integer."""
    phase = np.concatenate(([0.0], np.cumsum(hr_bpm * (step_s / 60.0))))
    n_beats = int(math.floor(phase[-1]))
    targets = np.arange(1, n_beats + 1, dtype=float)
    hi = np.searchsorted(phase, targets, side="left")
    lo = hi - 1
    frac = (targets - phase[lo]) / (phase[hi] - phase[lo])
    return (lo + frac) * step_s


def generate_week(config: GeneratorConfig = GeneratorConfig()) -> RrSeries:
    """Deterministic synthetic RR series for ``config.days`` days."""
    sched_seed, noise_seed = _seeds(config.seed)
    bouts = bout_schedule(config, sched_seed)

    horizon = config.days * DAY_S
    n_steps = int(round(horizon / STEP_S))
    # rate evaluated at step midpoints (exact for constant rate)
    t_mid = (np.arange(n_steps) + 0.5) * STEP_S
    hr = instantaneous_hr(config, t_mid, bouts)
    beats = integrate_and_fire(hr, STEP_S)
    rr = np.diff(np.concatenate(([0.0], beats))) * 1000.0

    if config.rsa_amplitude_ms:
        rr = rr + config.rsa_amplitude_ms * np.sin(2.0 * np.pi * config.respiratory_hz * beats)
    if config.noise_sd_ms:
        rr = rr + np.random.default_rng(noise_seed).normal(0.0, config.noise_sd_ms, rr.size)
    return RrSeries(config.start_epoch, rr)
