"""Tachogram resampling, Hann-tapered periodograms, band powers, spectrograms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SegmentTooShort, SeriesTooShort, TooFewBeats
from .timeseries import RrSeries

MIN_SEGMENT = 64


@dataclass(frozen=True)
class BandDefinition:
    vlf: tuple[float, float] = (0.003, 0.04)
    lf: tuple[float, float] = (0.04, 0.15)
    hf: tuple[float, float] = (0.15, 0.4)

    def __post_init__(self):
        edges = [self.vlf[0], self.vlf[1], self.lf[0], self.lf[1], self.hf[0], self.hf[1]]
        if not (edges[0] < edges[1] == edges[2] < edges[3] == edges[4] < edges[5]):
            raise ValueError("bands must be contiguous and increasing")

    def items(self):
        return (("vlf", self.vlf), ("lf", self.lf), ("hf", self.hf))


BANDS = BandDefinition()


@dataclass(frozen=True)
class Tachogram:
    t0: float  # epoch seconds of the first sample
    hz: float
    values: np.ndarray  # ms

    @property
    def duration_s(self) -> float:
        return self.values.size / self.hz


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    power: np.ndarray  # ms^2/Hz, one-sided

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])


@dataclass(frozen=True)
class BandPowers:
    vlf_ms2: float
    lf_ms2: float
    hf_ms2: float

    @property
    def lf_hf_ratio(self) -> float | None:
        return self.lf_ms2 / self.hf_ms2 if self.hf_ms2 > 0 else None


@dataclass(frozen=True)
class Spectrogram:
    window_starts: np.ndarray  # epoch seconds
    freqs: np.ndarray
    power: np.ndarray  # (windows, freqs), ms^2/Hz
    hz: float
    window_s: float
    step_s: float
    bands: BandDefinition = BANDS

    @property
    def unreliable_below_hz(self) -> float:
        """Frequencies under one cycle per window are not resolved."""
        return 1.0 / self.window_s

    def spectrum(self, i: int) -> Spectrum:
        return Spectrum(self.freqs, self.power[i])

    def band_powers(self) -> list[BandPowers]:
        return [band_powers(self.spectrum(i), self.bands) for i in range(len(self.power))]

    def to_json(self, max_freq_hz: float | None = None, digits: int = 6) -> dict:
        keep = slice(None) if max_freq_hz is None else self.freqs <= max_freq_hz + 1e-12
        fmt = lambda a: [float(f"{v:.{digits}g}") for v in a]  # noqa: E731
        return {
            "hz": self.hz,
            "window_s": self.window_s,
            "step_s": self.step_s,
            "unreliable_below_hz": self.unreliable_below_hz,
            "freqs": fmt(self.freqs[keep]),
            "windows": [
                {"t0": float(t), "power": fmt(row[keep])}
                for t, row in zip(self.window_starts, self.power)
            ],
            "bands": {name: list(rng) for name, rng in self.bands.items()},
        }


def resample_rr(series: RrSeries, hz: float = 4.0) -> Tachogram:
    """RR(t) linearly interpolated from beat times onto a uniform grid."""
    if len(series) < 2:
        raise TooFewBeats("need at least 2 beats to resample")
    offs = series.offsets
    n = int(math.floor((offs[-1] - offs[0]) * hz + 1e-9)) + 1
    grid = offs[0] + np.arange(n) / hz
    return Tachogram(series.start_epoch + offs[0], hz, np.interp(grid, offs, series.intervals))


def hann(n: int) -> np.ndarray:
    """Periodic Hann taper."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _periodograms(segments: np.ndarray, hz: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided density periodograms of the rows of ``segments``."""
    n = segments.shape[-1]
    w = hann(n)
    x = (segments - segments.mean(axis=-1, keepdims=True)) * w
    spec = np.fft.rfft(x, axis=-1)
    power = (spec.real**2 + spec.imag**2) / (hz * np.sum(w * w))
    # fold negative frequencies; DC and (even n) Nyquist appear once
    last = -1 if n % 2 == 0 else None
    power[..., 1:last] *= 2.0
    return np.fft.rfftfreq(n, d=1.0 / hz), power


def psd_window(segment, hz: float = 4.0) -> Spectrum:
    """Mean-removed, Hann-tapered periodogram in ms^2/Hz.

    Normalised so that ``sum(power) * df`` equals the mean square of the
    tapered segment divided by the mean square of the taper.
    """
    seg = np.asarray(segment, dtype=float)
    if seg.size < MIN_SEGMENT:
        raise SegmentTooShort(f"segment of {seg.size} samples < {MIN_SEGMENT}")
    freqs, power = _periodograms(seg[None, :], hz)
    return Spectrum(freqs, power[0])


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2.0)


def integrate_band(spectrum: Spectrum, lo: float, hi: float) -> float:
    """Trapezoidal integral of the power over [lo, hi], edges interpolated."""
    f, p = spectrum.freqs, spectrum.power
    lo, hi = max(lo, f[0]), min(hi, f[-1])
    if hi <= lo:
        return 0.0
    inner = (f > lo) & (f < hi)
    x = np.concatenate(([lo], f[inner], [hi]))
    y = np.concatenate(([np.interp(lo, f, p)], p[inner], [np.interp(hi, f, p)]))
    return _trapezoid(y, x)


def total_power(spectrum: Spectrum) -> float:
    return _trapezoid(spectrum.power, spectrum.freqs)


def band_powers(spectrum: Spectrum, bands: BandDefinition = BANDS) -> BandPowers:
    return BandPowers(*(integrate_band(spectrum, lo, hi) for _, (lo, hi) in bands.items()))


def spectrogram(
    tachogram: Tachogram,
    window_s: float = 300.0,
    step_s: float = 30.0,
    chunk: int = 2048,
) -> Spectrogram:
    """Sliding-window periodograms; partial tail windows are dropped."""
    hz = tachogram.hz
    win = int(round(window_s * hz))
    step = int(round(step_s * hz))
    x = tachogram.values
    if x.size < win:
        raise SeriesTooShort(f"tachogram spans {tachogram.duration_s:.1f} s < {window_s} s")
    if win < MIN_SEGMENT:
        raise SegmentTooShort(f"window of {win} samples < {MIN_SEGMENT}")
    n = (x.size - win) // step + 1
    frames = np.lib.stride_tricks.sliding_window_view(x, win)[::step][:n]
    blocks = []
    for i in range(0, n, chunk):
        freqs, p = _periodograms(frames[i : i + chunk], hz)
        blocks.append(p)
    starts = tachogram.t0 + np.arange(n) * step / hz
    return Spectrogram(starts, freqs, np.vstack(blocks), hz, float(window_s), float(step_s))


def bin_spectrogram(spec: Spectrogram, max_columns: int) -> Spectrogram:
    """Average consecutive windows so at most ``max_columns`` remain (display use)."""
    n = spec.power.shape[0]
    factor = max(1, math.ceil(n / max_columns))
    if factor == 1:
        return spec
    m = math.ceil(n / factor)
    power = np.vstack([spec.power[i * factor : (i + 1) * factor].mean(axis=0) for i in range(m)])
    starts = spec.window_starts[::factor][:m]
    return Spectrogram(
        starts, spec.freqs, power, spec.hz, spec.window_s, spec.step_s * factor, spec.bands
    )


def hf_peak_frequencies(spec: Spectrogram) -> np.ndarray:
    """Per-window frequency of the largest power inside the HF band."""
    lo, hi = spec.bands.hf
    mask = (spec.freqs >= lo) & (spec.freqs <= hi)
    return spec.freqs[mask][np.argmax(spec.power[:, mask], axis=1)]
