"""Delay embedding and recurrence matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistances, InvalidConfig, SeriesTooShort


@dataclass(frozen=True)
class RecurrenceConfig:
    embed_dim: int = 3
    delay: int = 4
    epsilon: float | None = None
    target_rate: float = 0.10
    max_points: int = 4096
    norm: str = "euclidean"

    def __post_init__(self):
        if self.embed_dim < 1 or self.delay < 1:
            raise InvalidConfig("embed_dim and delay must be >= 1")
        if self.epsilon is None and not 0 < self.target_rate < 1:
            raise InvalidConfig("target_rate must lie in (0, 1)")
        if self.epsilon is not None and self.epsilon < 0:
            raise InvalidConfig("epsilon must be >= 0")
        if self.norm not in ("euclidean", "max"):
            raise InvalidConfig(f"unknown norm {self.norm!r}")
        if self.max_points < 2:
            raise InvalidConfig("max_points must be >= 2")


@dataclass(frozen=True)
class RecurrenceMatrix:
    bits: np.ndarray  # (n, n) bool
    epsilon_used: float
    rate: float
    decimation: int = 1

    @property
    def n(self) -> int:
        return int(self.bits.shape[0])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "epsilon_used": self.epsilon_used,
            "rate": self.rate,
            "decimation": self.decimation,
            "rows": [run_lengths(row) for row in self.bits],
        }


def run_lengths(row: np.ndarray) -> list[int]:
    """Alternating run lengths of a boolean row, starting with a (possibly empty) False run."""
    row = np.asarray(row, dtype=bool)
    change = np.flatnonzero(np.diff(row.astype(np.int8))) + 1
    bounds = np.concatenate(([0], change, [row.size]))
    runs = np.diff(bounds).tolist()
    return runs if not row[0] else [0] + runs


def decode_run_lengths(runs: list[int]) -> np.ndarray:
    out = []
    value = False
    for r in runs:
        out.extend([value] * r)
        value = not value
    return np.array(out, dtype=bool)


def decimate(values, factor: int) -> np.ndarray:
    """Non-overlapping mean pooling; a short tail is averaged into a last point."""
    x = np.asarray(values, dtype=float)
    if factor < 1:
        raise InvalidConfig("factor must be >= 1")
    if factor == 1:
        return x.copy()
    full = x.size // factor
    head = x[: full * factor].reshape(full, factor).mean(axis=1)
    if x.size % factor:
        head = np.append(head, x[full * factor :].mean())
    return head


def decimation_factor(n: int, max_points: int) -> int:
    return max(1, math.ceil(n / max_points))


def delay_embed(values, m: int, tau: int) -> np.ndarray:
    """State vectors ``(x[k], x[k+tau], ..., x[k+(m-1)tau])`` as rows."""
    x = np.asarray(values, dtype=float)
    span = (m - 1) * tau
    if x.size < span + 1:
        raise SeriesTooShort(f"need at least {span + 1} samples for m={m}, tau={tau}")
    count = x.size - span
    return np.column_stack([x[j * tau : j * tau + count] for j in range(m)])


def distance_matrix(states: np.ndarray, norm: str = "euclidean") -> np.ndarray:
    """Pairwise state distances, accumulated coordinate by coordinate (exactly symmetric)."""
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    n = states.shape[0]
    acc = np.zeros((n, n))
    for col in states.T:
        diff = np.abs(col[:, None] - col[None, :])
        if norm == "max":
            np.maximum(acc, diff, out=acc)
        else:
            acc += diff * diff
    return acc if norm == "max" else np.sqrt(acc, out=acc)


def _calibrate(dist: np.ndarray, target: float) -> float:
    """Threshold whose recurrence rate is closest to ``target``.

    Bisects over the sorted off-diagonal distances. The returned threshold is
    the midpoint between two consecutive distinct distances, so no pair sits
    exactly on the boundary.
    """
    n = dist.shape[0]
    upper = np.sort(dist[np.triu_indices(n, k=1)])
    if upper[0] == upper[-1]:
        raise DegenerateDistances("all pairwise distances are equal")

    def rate_at(k: int) -> float:
        # cells with distance <= upper[k]: the diagonal plus both triangles
        count = np.searchsorted(upper, upper[k], side="right")
        return (n + 2 * count) / (n * n)

    lo, hi = 0, upper.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if rate_at(mid) < target:
            lo = mid + 1
        else:
            hi = mid
    best = min(
        (k for k in (lo - 1, lo) if 0 <= k < upper.size),
        key=lambda k: abs(rate_at(k) - target),
    )
    below = upper[best]
    nxt = np.searchsorted(upper, below, side="right")
    if nxt >= upper.size:
        return float(below)
    return float((below + upper[nxt]) / 2.0)


def recurrence_matrix(
    states, config: RecurrenceConfig = RecurrenceConfig(), decimation: int = 1
) -> RecurrenceMatrix:
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if states.shape[0] < 2:
        raise SeriesTooShort("need at least 2 states")
    return threshold(distance_matrix(states, config.norm), config, decimation)


def threshold(dist: np.ndarray, config: RecurrenceConfig, decimation: int = 1) -> RecurrenceMatrix:
    eps = config.epsilon if config.epsilon is not None else _calibrate(dist, config.target_rate)
    bits = dist <= eps
    return RecurrenceMatrix(bits, float(eps), float(bits.mean()), decimation)


def recurrence_from_series(values, config: RecurrenceConfig = RecurrenceConfig()):
    """Decimate to ``max_points``, embed, threshold.

    Returns ``(matrix, distances)``; the distance grid feeds the graded plot.
    """
    x = np.asarray(values, dtype=float)
    factor = decimation_factor(x.size, config.max_points)
    states = delay_embed(decimate(x, factor), config.embed_dim, config.delay)
    dist = distance_matrix(states, config.norm)
    return threshold(dist, config, factor), dist
