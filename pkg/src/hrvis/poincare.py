"""Poincaré pairs, SD1/SD2 descriptors and the confidence ellipse."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpread, TooFewBeats, TooFewPairs
from .timeseries import RrSeries

# chi-square quantiles with 2 degrees of freedom, 3 decimals
CHI2_2DF = {0.90: 4.605, 0.95: 5.991, 0.99: 9.210}


@dataclass(frozen=True)
class PoincarePairs:
    x: np.ndarray  # RR_n
    y: np.ndarray  # RR_{n+1}

    def __len__(self) -> int:
        return int(self.x.size)


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a_identity: float
    b_perp: float
    level: float
    rot_deg: float = 45.0

    def contains(self, x, y) -> np.ndarray:
        """Vectorised point-in-ellipse test."""
        dx = np.asarray(x, dtype=float) - self.cx
        dy = np.asarray(y, dtype=float) - self.cy
        u = (dx + dy) / math.sqrt(2.0)
        v = (dy - dx) / math.sqrt(2.0)
        return (u / self.a_identity) ** 2 + (v / self.b_perp) ** 2 <= 1.0


@dataclass(frozen=True)
class PoincareSummary:
    sd1_ms: float
    sd2_ms: float
    centroid: tuple[float, float]
    n_pairs: int
    ellipse: Ellipse | None = None

    @property
    def ratio(self) -> float | None:
        return self.sd1_ms / self.sd2_ms if self.sd2_ms > 0 else None

    def to_json(self) -> dict:
        e = self.ellipse
        return {
            "sd1_ms": self.sd1_ms,
            "sd2_ms": self.sd2_ms,
            "ratio": self.ratio,
            "centroid": list(self.centroid),
            "n_pairs": self.n_pairs,
            "ellipse": None
            if e is None
            else {
                "cx": e.cx,
                "cy": e.cy,
                "a_identity": e.a_identity,
                "b_perp": e.b_perp,
                "rot_deg": e.rot_deg,
                "level": e.level,
            },
        }


def poincare_pairs(series) -> PoincarePairs:
    rr = series.intervals if isinstance(series, RrSeries) else np.asarray(series, dtype=float)
    if rr.size < 2:
        raise TooFewBeats("need at least 2 beats for a Poincaré pair")
    return PoincarePairs(rr[:-1].copy(), rr[1:].copy())


def _rotated(pairs: PoincarePairs) -> tuple[np.ndarray, np.ndarray]:
    u = (pairs.x + pairs.y) / math.sqrt(2.0)
    v = (pairs.y - pairs.x) / math.sqrt(2.0)
    return u, v


def sd1_sd2(pairs: PoincarePairs, level: float | None = 0.95) -> PoincareSummary:
    """SD1 (across the identity line) and SD2 (along it).

    SD1 is the root-mean-square distance of the pairs from the identity line,
    which makes ``sd1 == rmssd / sqrt(2)`` exact; it differs from the centred
    standard deviation of ``v`` only by the mean successive difference. SD2 is
    the population standard deviation along the line. A single pair (two
    beats) is accepted and has SD2 = 0. The ellipse is attached
    when both spreads are positive and there are at least three pairs.
    """
    if len(pairs) < 1:
        raise TooFewPairs("need at least one pair")
    u, v = _rotated(pairs)
    sd1 = float(np.sqrt(np.mean(v * v)))
    sd2 = float(np.std(u))
    centroid = (float(pairs.x.mean()), float(pairs.y.mean()))
    ellipse = None
    if level is not None and len(pairs) >= 3 and sd1 > 0 and sd2 > 0:
        ellipse = _ellipse(centroid, sd1, sd2, level)
    return PoincareSummary(sd1, sd2, centroid, len(pairs), ellipse)


def _ellipse(centroid, sd1, sd2, level) -> Ellipse:
    try:
        scale = math.sqrt(CHI2_2DF[round(level, 2)])
    except KeyError:
        raise ValueError(f"no chi-square constant for level {level}") from None
    return Ellipse(centroid[0], centroid[1], scale * sd2, scale * sd1, level)


def confidence_ellipse(pairs: PoincarePairs, level: float = 0.95) -> Ellipse:
    if len(pairs) < 3:
        raise TooFewPairs("need at least 3 pairs for an ellipse")
    s = sd1_sd2(pairs, level=None)
    if s.sd1_ms == 0 or s.sd2_ms == 0:
        raise DegenerateSpread(f"sd1={s.sd1_ms}, sd2={s.sd2_ms}")
    return _ellipse(s.centroid, s.sd1_ms, s.sd2_ms, level)
